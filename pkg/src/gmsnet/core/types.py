"""Core domain types: video clips, class labels, and pipeline configuration."""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from gmsnet.core.errors import ConfigError, DataError


class GmsLabel(enum.Enum):
    """General-movements class. WM and FM are normal classes, PR is abnormal."""

    WM = "WM"
    FM = "FM"
    PR = "PR"

    @classmethod
    def from_string(cls, s: str) -> "GmsLabel":
        try:
            return cls[s.strip()]
        except KeyError:
            raise DataError(f"unknown GMs label {s!r}, expected one of WM, FM, PR") from None

    @property
    def index(self) -> int:
        return CLASS_ORDER.index(self)


# Fixed class order used for score vectors, confusion matrices and argmax
# tie-breaking throughout the package.
CLASS_ORDER: tuple[GmsLabel, ...] = (GmsLabel.WM, GmsLabel.FM, GmsLabel.PR)
NUM_CLASSES = len(CLASS_ORDER)


@dataclass
class VideoClip:
    """A decoded frame sequence with its frame rate and identifiers.

    frames: uint8 array of shape (T, H, W, 3), RGB channel order.
    """

    frames: np.ndarray
    fps: float
    infant_id: str = ""
    clip_id: str = ""

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3:
            raise DataError(
                f"clip {self.clip_id!r}: frames must have shape (T, H, W, 3), got {self.frames.shape}"
            )
        if self.frames.shape[0] == 0:
            raise DataError(f"clip {self.clip_id!r}: empty frame sequence")
        if self.frames.dtype != np.uint8:
            raise DataError(f"clip {self.clip_id!r}: frames must be uint8, got {self.frames.dtype}")
        if not self.fps > 0:
            raise DataError(f"clip {self.clip_id!r}: fps must be positive, got {self.fps}")

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    def with_frames(self, frames: np.ndarray, fps: float | None = None) -> "VideoClip":
        """Copy of this clip with new frame data (ids preserved)."""
        return VideoClip(
            frames=frames,
            fps=self.fps if fps is None else fps,
            infant_id=self.infant_id,
            clip_id=self.clip_id,
        )


@dataclass
class ManifestEntry:
    clip_id: str
    infant_id: str
    video_path: str
    label: GmsLabel
    clip_start_s: float
    clip_end_s: float


@dataclass
class DatasetManifest:
    """Validated list of clips with labels and time windows."""

    entries: list[ManifestEntry] = field(default_factory=list)
    root: Path = Path(".")

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_clip_id(self, clip_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.clip_id == clip_id:
                return e
        raise DataError(f"clip_id {clip_id!r} not in manifest")

    def resolve_path(self, entry: ManifestEntry) -> Path:
        """Resolve an entry's video path relative to the manifest location."""
        p = Path(entry.video_path)
        return p if p.is_absolute() else self.root / p

    def infant_labels(self) -> dict[str, GmsLabel]:
        """Label per infant (first clip's label; clips of one infant share a label)."""
        out: dict[str, GmsLabel] = {}
        for e in self.entries:
            out.setdefault(e.infant_id, e.label)
        return out


# Farneback parameter set used by the flow stage. Pinned so that cached flow
# artifacts are reproducible; included in the flow-stage config hash.
FARNEBACK_PARAMS: dict[str, float | int] = {
    "pyr_scale": 0.5,
    "levels": 3,
    "winsize": 15,
    "iterations": 3,
    "poly_n": 5,
    "poly_sigma": 1.2,
}


@dataclass
class PipelineConfig:
    """Structured configuration for the full pipeline.

    chunk_length and chunk_stride are the temporal-chunk length L and stride
    between chunk starts; crop_size is the square output resolution W = H.
    """

    target_fps: float = 6.0
    chunk_length: int = 30
    chunk_stride: int = 30
    crop_size: int = 224
    alpha: float = 0.8
    flow_clip_bound: float = 20.0
    mask_threshold: float = 0.5
    enable_extractor: bool = True
    enable_adjuster: bool = True
    seed: int = 0
    # Backend selection and auxiliary knobs.
    segmentation_backend: str = "luminance"
    pose_backend: str = "ground_truth"
    min_conf: float = 0.3
    pad_last_chunk: bool = True
    clip_duration_s: float = 60.0

    def __post_init__(self) -> None:
        if self.chunk_length <= 0:
            raise ConfigError(f"chunk_length must be > 0, got {self.chunk_length}")
        if self.chunk_length % 2 != 0:
            raise ConfigError(f"chunk_length must be even, got {self.chunk_length}")
        if self.chunk_stride <= 0:
            raise ConfigError(f"chunk_stride must be > 0, got {self.chunk_stride}")
        if self.crop_size <= 0:
            raise ConfigError(f"crop_size must be > 0, got {self.crop_size}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if not self.target_fps > 0:
            raise ConfigError(f"target_fps must be > 0, got {self.target_fps}")
        if not self.flow_clip_bound > 0:
            raise ConfigError(f"flow_clip_bound must be > 0, got {self.flow_clip_bound}")
        if not 0.0 <= self.mask_threshold <= 1.0:
            raise ConfigError(f"mask_threshold must be in [0, 1], got {self.mask_threshold}")
        if not 0.0 <= self.min_conf <= 1.0:
            raise ConfigError(f"min_conf must be in [0, 1], got {self.min_conf}")
        if not self.clip_duration_s > 0:
            raise ConfigError(f"clip_duration_s must be > 0, got {self.clip_duration_s}")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def from_file(cls, path: str | Path, overrides: Mapping[str, Any] | None = None) -> "PipelineConfig":
        """Load config from a YAML file; `overrides` (e.g. CLI flags) win."""
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        with open(path) as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        unknown = set(data) - set(cls.field_names())
        if unknown:
            raise ConfigError(f"unknown config keys in {path}: {sorted(unknown)}")
        if overrides:
            data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **kwargs: Any) -> "PipelineConfig":
        return dataclasses.replace(self, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def save(self, path: str | Path) -> None:
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True)

    # -- Stage-scoped hashing ------------------------------------------------
    # Each preprocessing stage hashes only the config subset that affects its
    # output, so that e.g. changing flow_clip_bound (applied at load time)
    # does not invalidate cached flow, while toggling an ablation flag does.

    def stage_subset(self, stage: str) -> dict[str, Any]:
        masked = ("target_fps", "mask_threshold", "enable_extractor", "segmentation_backend")
        adjusted = masked + (
            "crop_size",
            "alpha",
            "enable_adjuster",
            "pose_backend",
            "min_conf",
        )
        subsets: dict[str, tuple[str, ...]] = {
            "masked": masked,
            "adjusted": adjusted,
            "flow": adjusted,
        }
        if stage not in subsets:
            raise ConfigError(f"unknown cache stage {stage!r}")
        subset: dict[str, Any] = {k: getattr(self, k) for k in subsets[stage]}
        if stage == "flow":
            subset["farneback"] = dict(FARNEBACK_PARAMS)
        return subset

    def stage_hash(self, stage: str) -> str:
        payload = json.dumps({"stage": stage, **self.stage_subset(stage)}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]
