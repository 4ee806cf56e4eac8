"""Dense optical flow between consecutive frames and flow-aware flipping.

Flow is computed with the Farneback method on luminance frames using a
pinned parameter set (recorded in the flow-stage cache hash). Raw flow is in
px/frame; `clip_and_scale` conditions it to [-1, 1] before it enters the
temporal stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from gmsnet.core.errors import DataError
from gmsnet.core.types import FARNEBACK_PARAMS, VideoClip
from gmsnet.segmentation import to_luma


@dataclass
class FlowPair:
    """Horizontal and vertical displacement fields for frame pair (t, t+1)."""

    d_h: np.ndarray
    d_v: np.ndarray
    t: int

    def __post_init__(self) -> None:
        if self.d_h.shape != self.d_v.shape or self.d_h.ndim != 2:
            raise DataError(
                f"flow components must share a 2-D shape, got {self.d_h.shape} / {self.d_v.shape}"
            )
        if not (np.isfinite(self.d_h).all() and np.isfinite(self.d_v).all()):
            raise DataError(f"non-finite flow values at frame pair {self.t}")


def _gray(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(to_luma(frame)), 0, 255).astype(np.uint8)


def compute_flow(clip: VideoClip) -> list[FlowPair]:
    """Farneback flow for every consecutive frame pair; returns T-1 pairs."""
    if clip.n_frames < 2:
        raise DataError(f"clip {clip.clip_id!r} has {clip.n_frames} frame(s); need >= 2")
    prev = _gray(clip.frames[0])
    pairs: list[FlowPair] = []
    for t in range(clip.n_frames - 1):
        nxt = _gray(clip.frames[t + 1])
        flow = cv2.calcOpticalFlowFarneback(
            prev,
            nxt,
            None,
            pyr_scale=FARNEBACK_PARAMS["pyr_scale"],
            levels=FARNEBACK_PARAMS["levels"],
            winsize=FARNEBACK_PARAMS["winsize"],
            iterations=FARNEBACK_PARAMS["iterations"],
            poly_n=FARNEBACK_PARAMS["poly_n"],
            poly_sigma=FARNEBACK_PARAMS["poly_sigma"],
            flags=0,
        )
        pairs.append(FlowPair(d_h=flow[:, :, 0].copy(), d_v=flow[:, :, 1].copy(), t=t))
        prev = nxt
    return pairs


def flow_to_array(pairs: list[FlowPair]) -> np.ndarray:
    """Stack flow pairs into a (T-1, 2, H, W) float32 array (h then v)."""
    return np.stack([np.stack([p.d_h, p.d_v]) for p in pairs]).astype(np.float32)


def array_to_flow(arr: np.ndarray) -> list[FlowPair]:
    """Inverse of flow_to_array."""
    arr = np.asarray(arr)
    if arr.ndim != 4 or arr.shape[1] != 2:
        raise DataError(f"flow array must have shape (T-1, 2, H, W), got {arr.shape}")
    return [FlowPair(d_h=arr[t, 0], d_v=arr[t, 1], t=t) for t in range(arr.shape[0])]


def clip_and_scale(flow: FlowPair, bound: float) -> FlowPair:
    """Clamp displacements to [-bound, bound] and rescale linearly to [-1, 1]."""
    if not bound > 0:
        raise DataError(f"bound must be > 0, got {bound}")
    return FlowPair(
        d_h=np.clip(flow.d_h, -bound, bound) / bound,
        d_v=np.clip(flow.d_v, -bound, bound) / bound,
        t=flow.t,
    )


def hflip(image: np.ndarray, flows: list[FlowPair]) -> tuple[np.ndarray, list[FlowPair]]:
    """Mirror an image and its flow stack left-right.

    The horizontal component is mirrored and negated (motion toward image-
    right becomes motion toward image-left); the vertical component is only
    mirrored. An involution on both image and flows.
    """
    flipped_img = np.ascontiguousarray(image[:, ::-1])
    flipped_flows = [
        FlowPair(
            d_h=np.ascontiguousarray(-p.d_h[:, ::-1]),
            d_v=np.ascontiguousarray(p.d_v[:, ::-1]),
            t=p.t,
        )
        for p in flows
    ]
    return flipped_img, flipped_flows
