"""Preprocessing cache keyed by clip, stage, and a stage-scoped config hash.

Payloads are flat little-endian binary arrays (row-major) with a JSON sidecar
recording shape, dtype, stage, and the config hash that produced them. A get
whose stored hash does not match the current config is a miss, never a silent
reuse. Writes are atomic (write to temp file, then rename), so concurrent
writers of the same key are last-writer-wins.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gmsnet.core.errors import DataError
from gmsnet.core.types import PipelineConfig

STAGES = ("masked", "adjusted", "flow")


@dataclass
class CacheEntry:
    clip_id: str
    stage: str
    payload_path: Path
    shape: tuple[int, ...]
    dtype: str
    config_hash: str

    @property
    def sidecar_path(self) -> Path:
        return self.payload_path.with_suffix(".json")


class FrameCache:
    """Filesystem cache for per-clip stage payloads."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _paths(self, clip_id: str, stage: str) -> tuple[Path, Path]:
        d = self.root / clip_id
        return d / f"{stage}.bin", d / f"{stage}.json"

    def put(
        self, clip_id: str, stage: str, payload: np.ndarray, config: PipelineConfig
    ) -> CacheEntry:
        if stage not in STAGES:
            raise DataError(f"unknown cache stage {stage!r}")
        payload = np.ascontiguousarray(payload)
        # Little-endian on disk regardless of host order.
        le_dtype = payload.dtype.newbyteorder("<")
        data = payload.astype(le_dtype, copy=False)
        bin_path, meta_path = self._paths(clip_id, stage)
        bin_path.parent.mkdir(parents=True, exist_ok=True)
        meta = {
            "shape": list(payload.shape),
            "dtype": np.dtype(le_dtype).str,
            "stage": stage,
            "config_hash": config.stage_hash(stage),
        }
        _atomic_write(bin_path, data.tobytes())
        _atomic_write(meta_path, json.dumps(meta, sort_keys=True).encode())
        return CacheEntry(
            clip_id=clip_id,
            stage=stage,
            payload_path=bin_path,
            shape=tuple(payload.shape),
            dtype=meta["dtype"],
            config_hash=meta["config_hash"],
        )

    def lookup(self, clip_id: str, stage: str, config: PipelineConfig) -> CacheEntry | None:
        """Return the entry if present with a matching config hash, else None."""
        bin_path, meta_path = self._paths(clip_id, stage)
        if not (bin_path.exists() and meta_path.exists()):
            return None
        try:
            with open(meta_path) as f:
                meta = json.load(f)
        except (OSError, json.JSONDecodeError):
            return None
        if meta.get("stage") != stage or meta.get("config_hash") != config.stage_hash(stage):
            return None
        expected = int(np.prod(meta["shape"])) * np.dtype(meta["dtype"]).itemsize
        if bin_path.stat().st_size != expected:
            return None
        return CacheEntry(
            clip_id=clip_id,
            stage=stage,
            payload_path=bin_path,
            shape=tuple(meta["shape"]),
            dtype=meta["dtype"],
            config_hash=meta["config_hash"],
        )

    def get(self, clip_id: str, stage: str, config: PipelineConfig) -> np.ndarray | None:
        """Load the payload for (clip, stage) under the current config, or None on miss."""
        entry = self.lookup(clip_id, stage, config)
        if entry is None:
            return None
        data = np.fromfile(entry.payload_path, dtype=np.dtype(entry.dtype))
        return data.reshape(entry.shape)

    def open_memmap(self, clip_id: str, stage: str, config: PipelineConfig) -> np.memmap | None:
        """Read-only memmap view of a payload; None on miss."""
        entry = self.lookup(clip_id, stage, config)
        if entry is None:
            return None
        return np.memmap(
            entry.payload_path, dtype=np.dtype(entry.dtype), mode="r", shape=entry.shape
        )


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
