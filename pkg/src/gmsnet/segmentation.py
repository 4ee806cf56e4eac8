"""Body area extractor: per-frame saliency masks and background removal.

Backends are pluggable. The production backend wraps a serialized salient-
object-detection model; the hermetic test suite uses the ground-truth backend
(masks from the synthetic generator) or the luminance baseline (background-
difference saliency).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from gmsnet.core.errors import DataError, PipelineError
from gmsnet.core.types import VideoClip

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


@dataclass
class SaliencyMask:
    """Per-frame saliency map with values in [0, 1]."""

    values: np.ndarray
    frame_index: int

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DataError(f"saliency mask must be 2-D, got shape {v.shape}")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise DataError("saliency values must lie in [0, 1]")
        self.values = v


class SegmentationBackend:
    """Interface: deterministic per-frame saliency inference.

    `frame_index` is the index within the clip being processed, so backends
    backed by precomputed per-frame data can look it up.
    """

    name: str = "base"

    def infer(self, frame: np.ndarray, frame_index: int) -> SaliencyMask:
        raise NotImplementedError


def to_luma(frame: np.ndarray) -> np.ndarray:
    """Fixed-weight RGB -> luminance conversion (float64, 0..255 range)."""
    return np.asarray(frame, dtype=np.float64) @ LUMA_WEIGHTS


class GroundTruthBackend(SegmentationBackend):
    """Saliency from precomputed per-frame masks (synthetic ground truth)."""

    name = "ground_truth"

    def __init__(self, masks: np.ndarray):
        masks = np.asarray(masks)
        if masks.ndim != 3:
            raise DataError(f"ground-truth masks must be (T, H, W), got {masks.shape}")
        self._masks = masks

    def infer(self, frame: np.ndarray, frame_index: int) -> SaliencyMask:
        if not 0 <= frame_index < self._masks.shape[0]:
            raise PipelineError(f"no ground-truth mask for frame {frame_index}")
        m = self._masks[frame_index].astype(np.float64)
        if m.max() > 1.0:
            m = m / 255.0
        return SaliencyMask(values=m, frame_index=frame_index)


class LuminanceBackend(SegmentationBackend):
    """Saliency as blurred absolute luminance difference from a background model."""

    name = "luminance"

    def __init__(self, background_model: np.ndarray):
        bg = np.asarray(background_model)
        if bg.ndim == 3:
            bg = to_luma(bg)
        self._background = bg.astype(np.float64)

    def infer(self, frame: np.ndarray, frame_index: int) -> SaliencyMask:
        diff = np.abs(to_luma(frame) - self._background) / 255.0
        blurred = cv2.blur(diff, (5, 5))
        peak = blurred.max()
        if peak > 0:
            blurred = blurred / peak
        return SaliencyMask(values=np.clip(blurred, 0.0, 1.0), frame_index=frame_index)


class TorchScriptSegmentationBackend(SegmentationBackend):
    """Adapter for a serialized (TorchScript) salient-object-detection model.

    Contract: the module maps a float32 tensor (1, 3, H, W) scaled to [0, 1]
    to a saliency tensor (1, 1, H, W) whose values are min-max normalized to
    [0, 1] here before thresholding.
    """

    def __init__(self, model_path: str | Path):
        import torch

        model_path = Path(model_path)
        if not model_path.exists():
            raise DataError(f"segmentation model not found: {model_path}")
        self._torch = torch
        self._model = torch.jit.load(str(model_path), map_location="cpu")
        self._model.eval()
        self.name = f"model:{model_path}"

    def infer(self, frame: np.ndarray, frame_index: int) -> SaliencyMask:
        torch = self._torch
        x = torch.from_numpy(np.ascontiguousarray(frame)).float().permute(2, 0, 1) / 255.0
        with torch.no_grad():
            out = self._model(x.unsqueeze(0))
        sal = out.squeeze().numpy().astype(np.float64)
        if sal.shape != frame.shape[:2]:
            sal = cv2.resize(sal, (frame.shape[1], frame.shape[0]), interpolation=cv2.INTER_LINEAR)
        lo, hi = sal.min(), sal.max()
        if hi > lo:
            sal = (sal - lo) / (hi - lo)
        else:
            sal = np.zeros_like(sal)
        return SaliencyMask(values=sal, frame_index=frame_index)


def median_background(clip: VideoClip) -> np.ndarray:
    """Per-pixel temporal median image, the luminance backend's background model."""
    return np.median(clip.frames, axis=0)


def extract_body(clip: VideoClip, backend: SegmentationBackend, threshold: float) -> VideoClip:
    """Keep pixels whose saliency >= threshold; everything else becomes black.

    Dimensions, frame count and fps are preserved. A backend failure on any
    frame aborts with the frame index; frames are never silently skipped.
    """
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"threshold must be in [0, 1], got {threshold}")
    out = np.zeros_like(clip.frames)
    for t in range(clip.n_frames):
        frame = clip.frames[t]
        try:
            mask = backend.infer(frame, t)
        except Exception as exc:
            raise PipelineError(
                f"segmentation backend {backend.name!r} failed on frame {t}: {exc}"
            ) from exc
        if mask.values.shape != frame.shape[:2]:
            raise PipelineError(
                f"backend {backend.name!r} returned mask shape {mask.values.shape} "
                f"for frame shape {frame.shape[:2]} (frame {t})"
            )
        keep = mask.values >= threshold
        out[t][keep] = frame[keep]
    return clip.with_frames(out)
