"""Infant general-movements (GMs) video classification toolkit.

Pipeline stages: body-area extraction, pose-based position adjustment,
dense optical flow, temporal chunking, and a two-stream fusion classifier,
plus a deterministic synthetic-video harness for desk-scale testing.
"""

from gmsnet.core import (
    DataError,
    DatasetManifest,
    GmsError,
    GmsLabel,
    ManifestEntry,
    PipelineConfig,
    PipelineError,
    VideoClip,
)

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DatasetManifest",
    "GmsError",
    "GmsLabel",
    "ManifestEntry",
    "PipelineConfig",
    "PipelineError",
    "VideoClip",
    "__version__",
]
