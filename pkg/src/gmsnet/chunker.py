"""Temporal chunking: per-chunk spatial frame and stacked-flow input.

For 1-based chunk index n, chunk length L and stride tau (frames 0-indexed):
the spatial input is the frame at (n-1)*tau + L/2 - 1, and the temporal
input stacks the L flow pairs starting at (n-1)*tau, interleaved as
h, v, h, v, ... along the channel axis (channel 2k-1 = horizontal component
of the k-th pair, channel 2k = vertical, 1-based).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gmsnet.core.errors import DataError
from gmsnet.flow import FlowPair, clip_and_scale


@dataclass
class TemporalChunk:
    """One network input: center frame, stacked conditioned flow, provenance."""

    n: int  # 1-based chunk index
    x_s: np.ndarray  # (H, W, 3) uint8 RGB
    x_t: np.ndarray  # (2L, H, W) float32 in [-1, 1]
    frame_range: tuple[int, int]  # [start, end) absolute frame indices
    padded: bool = False

    def __post_init__(self) -> None:
        if self.x_t.shape[0] % 2 != 0:
            raise DataError(f"chunk {self.n}: channel count {self.x_t.shape[0]} must be even")
        if self.frame_range[1] - self.frame_range[0] != self.x_t.shape[0] // 2:
            raise DataError(
                f"chunk {self.n}: frame_range {self.frame_range} does not span L frames"
            )

    @property
    def chunk_length(self) -> int:
        return self.x_t.shape[0] // 2


def chunk_indices(n: int, length: int, tau: int) -> tuple[int, list[int]]:
    """Spatial frame index and flow indices for the n-th chunk (0-indexed
    frames; indices may exceed the available data and must be validated by
    the caller)."""
    if n < 1:
        raise DataError(f"chunk index must be >= 1, got {n}")
    if length <= 0 or length % 2 != 0:
        raise DataError(f"chunk length must be positive and even, got {length}")
    if tau <= 0:
        raise DataError(f"chunk stride must be > 0, got {tau}")
    start = (n - 1) * tau
    spatial = start + length // 2 - 1
    flows = [start + k - 1 for k in range(1, length + 1)]
    return spatial, flows


def stack_flows(flows: list[FlowPair], bound: float) -> np.ndarray:
    """Interleave conditioned flow components into a (2L, H, W) float32 array."""
    channels = []
    for p in flows:
        c = clip_and_scale(p, bound)
        channels.append(c.d_h)
        channels.append(c.d_v)
    return np.stack(channels).astype(np.float32)


def deinterleave(x_t: np.ndarray) -> list[FlowPair]:
    """Split stacked channels back into per-pair (h, v) fields; odd channels
    (1-based) are horizontal, even channels vertical."""
    if x_t.shape[0] % 2 != 0:
        raise DataError(f"stacked flow has odd channel count {x_t.shape[0]}")
    return [
        FlowPair(d_h=x_t[2 * k], d_v=x_t[2 * k + 1], t=k) for k in range(x_t.shape[0] // 2)
    ]


def build_chunks(
    frames: np.ndarray,
    flows: list[FlowPair],
    length: int,
    tau: int,
    flow_bound: float = 20.0,
    pad_last_chunk: bool = True,
) -> list[TemporalChunk]:
    """Build all chunks that fit the clip; short clips yield an empty list.

    With pad_last_chunk, a chunk that is exactly one flow pair short (its
    last flow index would need the frame after the final one) is completed
    by repeating the final available flow once.
    """
    n_frames = frames.shape[0]
    if len(flows) != n_frames - 1:
        raise DataError(f"expected {n_frames - 1} flow pairs for {n_frames} frames, got {len(flows)}")
    chunks: list[TemporalChunk] = []
    n = 1
    while True:
        spatial, flow_idx = chunk_indices(n, length, tau)
        if spatial >= n_frames:
            break
        last = flow_idx[-1]
        padded = False
        if last < len(flows):
            selected = [flows[i] for i in flow_idx]
        elif pad_last_chunk and last == len(flows) and len(flows) > 0:
            selected = [flows[i] for i in flow_idx[:-1]] + [flows[-1]]
            padded = True
        else:
            break
        chunks.append(
            TemporalChunk(
                n=n,
                x_s=frames[spatial],
                x_t=stack_flows(selected, flow_bound),
                frame_range=(flow_idx[0], flow_idx[0] + length),
                padded=padded,
            )
        )
        n += 1
    return chunks
