"""Body position adjuster: unify scale and orientation across videos.

The adjustment measures the body axis (shoulder-midpoint to hip-midpoint)
per frame, aggregates angle / center / length with an interquartile mean,
and rotates, crops and resizes the video so every infant appears upright,
centered, and at a common scale.

Angle convention (pinned by tests): the axis angle is measured from the
image's downward vertical, positive toward image-right, in (-180, 180].
`rotate_frames(clip, theta)` rotates content so that an axis previously
measuring `theta` measures 0 afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from gmsnet.core.errors import DataError, PipelineError
from gmsnet.core.types import VideoClip
from gmsnet.synthdata import JOINT_NAMES, MARKER_COLORS


@dataclass
class PoseEstimate:
    """Four body joints with per-joint confidences."""

    left_shoulder: tuple[float, float]
    right_shoulder: tuple[float, float]
    left_hip: tuple[float, float]
    right_hip: tuple[float, float]
    confidences: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)

    def joints(self) -> np.ndarray:
        return np.array(
            [self.left_shoulder, self.right_shoulder, self.left_hip, self.right_hip],
            dtype=np.float64,
        )

    def all_valid(self, min_conf: float) -> bool:
        return all(c >= min_conf for c in self.confidences) and bool(
            np.isfinite(self.joints()).all()
        )


@dataclass
class BodyAxisMeasurement:
    """Per-frame body-axis geometry: angle (deg), center (px), length (px)."""

    theta: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    length: float = 0.0
    valid: bool = True


@dataclass
class AdjustmentParams:
    """Aggregated adjustment: rotations, crop center, and square side.

    theta0 is the first-step coarse rotation; theta_bar the second-step
    refinement. center_bar is expressed in the fully rotated frame.
    crop_side is exactly 3 * length_bar / alpha.
    """

    theta0: float
    theta_bar: float
    center_bar: tuple[float, float]
    length_bar: float
    crop_side: float
    alpha: float
    valid_frame_fraction: float = 1.0

    def __post_init__(self) -> None:
        expected = 3.0 * self.length_bar / self.alpha
        if not math.isclose(self.crop_side, expected, rel_tol=1e-12, abs_tol=1e-9):
            raise DataError(
                f"crop_side {self.crop_side} violates 3*length_bar/alpha = {expected}"
            )
        if not self.crop_side > 0:
            raise DataError(f"crop_side must be > 0, got {self.crop_side}")

    def report(self) -> dict:
        return {
            "theta0": self.theta0,
            "theta_bar": self.theta_bar,
            "center_bar": list(self.center_bar),
            "length_bar": self.length_bar,
            "R": self.crop_side,
            "valid_frame_fraction": self.valid_frame_fraction,
        }


class PoseBackend:
    """Interface: deterministic per-frame pose inference."""

    name: str = "base"

    def infer(self, frame: np.ndarray, frame_index: int) -> PoseEstimate:
        raise NotImplementedError


class MarkerPoseBackend(PoseBackend):
    """Recovers the synthetic generator's baked-in joint markers.

    Joints are located as centroids of pixels close to each marker color,
    which survives rotation, cropping and resizing of the frames. Acts as
    the ground-truth backend for synthetic clips.
    """

    name = "ground_truth"

    def __init__(self, color_tolerance: float = 80.0, min_pixels: int = 3):
        self._tol2 = float(color_tolerance) ** 2
        self._min_pixels = min_pixels

    def infer(self, frame: np.ndarray, frame_index: int) -> PoseEstimate:
        f = frame.astype(np.int64)
        coords = []
        confs = []
        for name in JOINT_NAMES:
            color = np.array(MARKER_COLORS[name], dtype=np.int64)
            dist2 = ((f - color) ** 2).sum(axis=2)
            ys, xs = np.nonzero(dist2 < self._tol2)
            if xs.size < self._min_pixels:
                coords.append((math.nan, math.nan))
                confs.append(0.0)
            else:
                coords.append((float(xs.mean()), float(ys.mean())))
                confs.append(1.0)
        return PoseEstimate(
            left_shoulder=coords[0],
            right_shoulder=coords[1],
            left_hip=coords[2],
            right_hip=coords[3],
            confidences=tuple(confs),
        )


class TorchScriptPoseBackend(PoseBackend):
    """Adapter for a serialized pose model.

    Contract: the module maps a float32 tensor (1, 3, H, W) scaled to [0, 1]
    to a (1, 12) tensor of [x, y, conf] per joint in the order left_shoulder,
    right_shoulder, left_hip, right_hip, with x, y normalized to [0, 1].
    """

    def __init__(self, model_path: str | Path):
        import torch

        model_path = Path(model_path)
        if not model_path.exists():
            raise DataError(f"pose model not found: {model_path}")
        self._torch = torch
        self._model = torch.jit.load(str(model_path), map_location="cpu")
        self._model.eval()
        self.name = f"model:{model_path}"

    def infer(self, frame: np.ndarray, frame_index: int) -> PoseEstimate:
        torch = self._torch
        x = torch.from_numpy(np.ascontiguousarray(frame)).float().permute(2, 0, 1) / 255.0
        with torch.no_grad():
            out = self._model(x.unsqueeze(0)).reshape(-1).numpy()
        if out.size != 12:
            raise PipelineError(f"pose model returned {out.size} values, expected 12")
        h, w = frame.shape[:2]
        pts = [(float(out[3 * j] * (w - 1)), float(out[3 * j + 1] * (h - 1))) for j in range(4)]
        confs = tuple(float(out[3 * j + 2]) for j in range(4))
        return PoseEstimate(pts[0], pts[1], pts[2], pts[3], confidences=confs)


def body_axis(pose: PoseEstimate, min_conf: float = 0.3) -> BodyAxisMeasurement:
    """Axis through the shoulder and hip midpoints.

    Returns an invalid measurement when any joint has low confidence or the
    midpoints coincide.
    """
    if not pose.all_valid(min_conf):
        return BodyAxisMeasurement(valid=False)
    pts = pose.joints()
    m_s = pts[:2].mean(axis=0)
    m_h = pts[2:].mean(axis=0)
    v = m_h - m_s
    length = float(np.hypot(v[0], v[1]))
    if length == 0.0:
        return BodyAxisMeasurement(valid=False)
    theta = math.degrees(math.atan2(v[0], v[1]))
    center = (m_s + m_h) / 2.0
    return BodyAxisMeasurement(
        theta=theta, center=(float(center[0]), float(center[1])), length=length
    )


def interquartile_mean(values) -> float:
    """Mean of the samples lying within [Q1, Q3] (quartiles by linear
    interpolation); falls back to the median when no sample lies inside."""
    arr = np.asarray(list(values), dtype=np.float64)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise DataError("interquartile_mean of empty input")
    q1, q3 = np.percentile(arr, [25.0, 75.0])
    inside = arr[(arr >= q1) & (arr <= q3)]
    if inside.size == 0:
        return float(np.median(arr))
    return float(inside.mean())


def frame_center(shape: tuple[int, ...]) -> tuple[float, float]:
    """Center of the pixel grid (x, y) for an (H, W, ...) shape."""
    h, w = shape[0], shape[1]
    return ((w - 1) / 2.0, (h - 1) / 2.0)


def rotation_matrix(theta_deg: float, center: tuple[float, float]) -> np.ndarray:
    """Forward 2x3 map sending source points to their rotated positions so
    that an axis measuring theta_deg measures 0 afterwards."""
    return cv2.getRotationMatrix2D(center, -theta_deg, 1.0)


def transform_points(points: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Apply a forward 2x3 affine to an (N, 2) array of points."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    return pts @ matrix[:, :2].T + matrix[:, 2]


def rotate_frames(clip: VideoClip, theta: float) -> VideoClip:
    """Rotate every frame about its center; out-of-canvas regions are black."""
    if not math.isfinite(theta):
        raise DataError(f"rotation angle must be finite, got {theta}")
    if theta == 0.0:
        return clip.with_frames(clip.frames.copy())
    m = rotation_matrix(theta, frame_center(clip.frames.shape[1:]))
    out = np.empty_like(clip.frames)
    for t in range(clip.n_frames):
        out[t] = cv2.warpAffine(
            clip.frames[t],
            m,
            (clip.width, clip.height),
            flags=cv2.INTER_LINEAR,
            borderMode=cv2.BORDER_CONSTANT,
            borderValue=(0, 0, 0),
        )
    return clip.with_frames(out)


def estimate_adjustment(
    clip: VideoClip,
    backend: PoseBackend,
    alpha: float,
    min_conf: float = 0.3,
) -> AdjustmentParams:
    """Two-step adjustment estimate.

    Step 1: pose on the first frame with a valid estimate gives the coarse
    angle theta0; all frames are rotated by it. Step 2: per-frame axis
    measurements on the rotated frames are aggregated with the interquartile
    mean into theta_bar, center_bar, length_bar; the crop side is
    3 * length_bar / alpha. Frames with invalid poses are excluded from the
    statistics. center_bar is mapped into the final (theta_bar-rotated)
    coordinate frame.
    """
    if not alpha > 0:
        raise DataError(f"alpha must be > 0, got {alpha}")

    theta0 = None
    for t in range(clip.n_frames):
        m = body_axis(backend.infer(clip.frames[t], t), min_conf)
        if m.valid:
            theta0 = m.theta
            break
    if theta0 is None:
        raise PipelineError(f"no valid pose in any frame of clip {clip.clip_id!r}")

    rotated = rotate_frames(clip, theta0)
    thetas: list[float] = []
    cxs: list[float] = []
    cys: list[float] = []
    lengths: list[float] = []
    for t in range(rotated.n_frames):
        m = body_axis(backend.infer(rotated.frames[t], t), min_conf)
        if not m.valid:
            continue
        thetas.append(m.theta)
        cxs.append(m.center[0])
        cys.append(m.center[1])
        lengths.append(m.length)
    if not thetas:
        raise PipelineError(f"no valid pose after coarse rotation of clip {clip.clip_id!r}")

    theta_bar = interquartile_mean(thetas)
    c_bar = np.array([interquartile_mean(cxs), interquartile_mean(cys)])
    length_bar = interquartile_mean(lengths)

    m2 = rotation_matrix(theta_bar, frame_center(clip.frames.shape[1:]))
    center_bar = transform_points(c_bar, m2)[0]
    return AdjustmentParams(
        theta0=theta0,
        theta_bar=theta_bar,
        center_bar=(float(center_bar[0]), float(center_bar[1])),
        length_bar=length_bar,
        crop_side=3.0 * length_bar / alpha,
        alpha=alpha,
        valid_frame_fraction=len(thetas) / rotated.n_frames,
    )


def adjustment_affine(
    params: AdjustmentParams, frame_shape: tuple[int, ...], out_size: int
) -> np.ndarray:
    """Forward 2x3 affine from source pixels to adjusted-output pixels.

    Composes the two rotations about the frame center with the square crop
    (side crop_side, centered on center_bar) and the resize to out_size,
    using pixel-center coordinates throughout.
    """
    center = frame_center(frame_shape)
    m_rot = rotation_matrix(params.theta0 + params.theta_bar, center)
    s = out_size / params.crop_side
    half = params.crop_side / 2.0
    affine = s * m_rot
    affine[0, 2] += s * (half - params.center_bar[0]) - 0.5
    affine[1, 2] += s * (half - params.center_bar[1]) - 0.5
    return affine


def apply_adjustment(clip: VideoClip, params: AdjustmentParams, out_size: int) -> VideoClip:
    """Rotate, crop to the square (padding black where it leaves the canvas),
    and resize to out_size x out_size with bilinear interpolation."""
    if out_size <= 0:
        raise DataError(f"out_size must be > 0, got {out_size}")
    if not params.crop_side > 0:
        raise DataError(f"crop_side must be > 0, got {params.crop_side}")
    affine = adjustment_affine(params, clip.frames.shape[1:], out_size)
    out = np.empty((clip.n_frames, out_size, out_size, 3), dtype=np.uint8)
    for t in range(clip.n_frames):
        out[t] = cv2.warpAffine(
            clip.frames[t],
            affine,
            (out_size, out_size),
            flags=cv2.INTER_LINEAR,
            borderMode=cv2.BORDER_CONSTANT,
            borderValue=(0, 0, 0),
        )
    return clip.with_frames(out)


def resize_clip(clip: VideoClip, out_size: int) -> VideoClip:
    """Plain bilinear resize of every frame to out_size x out_size (the
    adjuster-disabled path)."""
    out = np.empty((clip.n_frames, out_size, out_size, 3), dtype=np.uint8)
    for t in range(clip.n_frames):
        out[t] = cv2.resize(clip.frames[t], (out_size, out_size), interpolation=cv2.INTER_LINEAR)
    return clip.with_frames(out)
