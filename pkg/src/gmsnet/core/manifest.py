"""Dataset manifest CSV loading and saving.

CSV schema: header `clip_id,infant_id,video_path,label,clip_start_s,clip_end_s`
with labels in {WM, FM, PR}. Relative video paths resolve against the
manifest's directory.
"""

from __future__ import annotations

import csv
from pathlib import Path

from gmsnet.core.errors import DataError
from gmsnet.core.types import DatasetManifest, GmsLabel, ManifestEntry

MANIFEST_COLUMNS = ("clip_id", "infant_id", "video_path", "label", "clip_start_s", "clip_end_s")

DURATION_TOL_S = 1e-6


def load_manifest(
    path: str | Path,
    clip_duration_s: float = 60.0,
    check_files: bool = True,
) -> DatasetManifest:
    """Load and validate a manifest CSV.

    Every row must describe a window of exactly `clip_duration_s` seconds and
    reference an existing file or frame directory (unless check_files=False).
    Raises DataError naming the offending row on any violation.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest file not found: {path}")
    root = path.parent

    entries: list[ManifestEntry] = []
    seen_ids: set[str] = set()
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_COLUMNS:
            raise DataError(
                f"manifest {path}: header must be {','.join(MANIFEST_COLUMNS)}, "
                f"got {reader.fieldnames}"
            )
        for row_num, row in enumerate(reader, start=2):
            if any(row.get(c) in (None, "") for c in MANIFEST_COLUMNS):
                raise DataError(f"manifest {path} row {row_num}: missing or empty field")
            try:
                start = float(row["clip_start_s"])
                end = float(row["clip_end_s"])
            except ValueError as exc:
                raise DataError(f"manifest {path} row {row_num}: bad time value ({exc})") from None
            try:
                label = GmsLabel.from_string(row["label"])
            except DataError:
                raise DataError(
                    f"manifest {path} row {row_num}: unknown label {row['label']!r}"
                ) from None
            clip_id = row["clip_id"]
            if clip_id in seen_ids:
                raise DataError(f"manifest {path} row {row_num}: duplicate clip_id {clip_id!r}")
            seen_ids.add(clip_id)
            if abs((end - start) - clip_duration_s) > DURATION_TOL_S:
                raise DataError(
                    f"manifest {path} row {row_num}: clip duration {end - start:g} s "
                    f"!= configured {clip_duration_s:g} s"
                )
            entries.append(
                ManifestEntry(
                    clip_id=clip_id,
                    infant_id=row["infant_id"],
                    video_path=row["video_path"],
                    label=label,
                    clip_start_s=start,
                    clip_end_s=end,
                )
            )

    manifest = DatasetManifest(entries=entries, root=root)
    if check_files:
        for e in entries:
            p = manifest.resolve_path(e)
            if not p.exists():
                raise DataError(f"manifest {path}: clip {e.clip_id!r} references missing {p}")
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write a manifest back to CSV (inverse of load_manifest)."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(MANIFEST_COLUMNS)
        for e in manifest.entries:
            writer.writerow(
                [e.clip_id, e.infant_id, e.video_path, e.label.value, e.clip_start_s, e.clip_end_s]
            )
