"""Video IO and frame-rate resampling.

Clips are stored on disk either as lossless image sequences (a directory of
numbered PNGs plus an ``index.json`` with fps and frame count) or as any
container cv2 can decode.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import cv2
import numpy as np

from gmsnet.core.errors import DataError
from gmsnet.core.types import VideoClip

INDEX_FILE = "index.json"
RATIO_TOL = 1e-6


def resample_fps(clip: VideoClip, target_fps: float) -> VideoClip:
    """Downsample a clip by frame decimation.

    Keeps every (fps / target_fps)-th frame starting at index 0. The ratio
    must be integral within 1e-6; no temporal interpolation is performed.
    """
    if not target_fps > 0:
        raise DataError(f"target_fps must be > 0, got {target_fps}")
    if target_fps > clip.fps:
        raise DataError(
            f"clip {clip.clip_id!r}: target_fps {target_fps:g} exceeds source fps {clip.fps:g}"
        )
    ratio = clip.fps / target_fps
    if abs(ratio - round(ratio)) > RATIO_TOL:
        raise DataError(
            f"clip {clip.clip_id!r}: fps {clip.fps:g} not divisible by target {target_fps:g} "
            f"(ratio {ratio:g})"
        )
    step = int(round(ratio))
    if step == 1:
        return clip.with_frames(clip.frames.copy(), fps=target_fps)
    return clip.with_frames(np.ascontiguousarray(clip.frames[::step]), fps=target_fps)


def save_image_sequence(clip: VideoClip, directory: str | Path) -> None:
    """Write frames as 00000.png ... plus an index.json sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for t in range(clip.n_frames):
        # PNG is lossless; store as BGR on disk per cv2 convention.
        ok = cv2.imwrite(str(directory / f"{t:05d}.png"), clip.frames[t][:, :, ::-1])
        if not ok:
            raise DataError(f"failed to write frame {t} under {directory}")
    index = {
        "fps": clip.fps,
        "n_frames": clip.n_frames,
        "height": clip.height,
        "width": clip.width,
    }
    with open(directory / INDEX_FILE, "w") as f:
        json.dump(index, f, sort_keys=True)


def _load_image_dir(directory: Path) -> tuple[np.ndarray, float]:
    index_path = directory / INDEX_FILE
    if not index_path.exists():
        raise DataError(f"image sequence {directory} is missing {INDEX_FILE}")
    with open(index_path) as f:
        index = json.load(f)
    fps = float(index["fps"])
    n = int(index["n_frames"])
    frames = []
    for t in range(n):
        p = directory / f"{t:05d}.png"
        img = cv2.imread(str(p), cv2.IMREAD_COLOR)
        if img is None:
            raise DataError(f"failed to read frame {p}")
        frames.append(img[:, :, ::-1])  # BGR -> RGB
    return np.ascontiguousarray(np.stack(frames)), fps


def _load_video_file(path: Path) -> tuple[np.ndarray, float]:
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise DataError(f"cannot open video file {path}")
    fps = cap.get(cv2.CAP_PROP_FPS)
    frames = []
    while True:
        ok, frame = cap.read()
        if not ok:
            break
        frames.append(frame[:, :, ::-1])
    cap.release()
    if not frames:
        raise DataError(f"no frames decoded from {path}")
    if not fps > 0:
        raise DataError(f"video {path} reports non-positive fps {fps}")
    return np.ascontiguousarray(np.stack(frames)), float(fps)


def load_clip(
    path: str | Path,
    clip_id: str = "",
    infant_id: str = "",
    start_s: float = 0.0,
    end_s: float | None = None,
) -> VideoClip:
    """Load a clip from an image-sequence directory or a video file.

    [start_s, end_s) selects the frame window; end_s=None keeps everything
    after start_s.
    """
    path = Path(path)
    if path.is_dir():
        frames, fps = _load_image_dir(path)
    elif path.exists():
        frames, fps = _load_video_file(path)
    else:
        raise DataError(f"video path does not exist: {path}")

    first = int(math.floor(start_s * fps + 0.5))
    last = frames.shape[0] if end_s is None else int(math.floor(end_s * fps + 0.5))
    if first < 0 or first >= frames.shape[0]:
        raise DataError(f"{path}: start {start_s:g}s outside video ({frames.shape[0]} frames)")
    if last > frames.shape[0]:
        raise DataError(
            f"{path}: end {end_s:g}s beyond video length ({frames.shape[0]} frames at {fps:g} fps)"
        )
    if last <= first:
        raise DataError(f"{path}: empty window [{start_s:g}, {end_s}]")
    return VideoClip(
        frames=np.ascontiguousarray(frames[first:last]),
        fps=fps,
        infant_id=infant_id,
        clip_id=clip_id,
    )
