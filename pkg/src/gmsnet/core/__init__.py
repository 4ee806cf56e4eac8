from gmsnet.core.cache import CacheEntry, FrameCache, STAGES
from gmsnet.core.errors import ConfigError, DataError, GmsError, PipelineError
from gmsnet.core.manifest import load_manifest, save_manifest
from gmsnet.core.types import (
    CLASS_ORDER,
    FARNEBACK_PARAMS,
    NUM_CLASSES,
    DatasetManifest,
    GmsLabel,
    ManifestEntry,
    PipelineConfig,
    VideoClip,
)
from gmsnet.core.video import load_clip, resample_fps, save_image_sequence

__all__ = [
    "CLASS_ORDER",
    "CacheEntry",
    "ConfigError",
    "DataError",
    "DatasetManifest",
    "FARNEBACK_PARAMS",
    "FrameCache",
    "GmsError",
    "GmsLabel",
    "ManifestEntry",
    "NUM_CLASSES",
    "PipelineConfig",
    "PipelineError",
    "STAGES",
    "VideoClip",
    "load_clip",
    "load_manifest",
    "resample_fps",
    "save_image_sequence",
    "save_manifest",
]
