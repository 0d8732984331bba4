"""Dataset manifests: CSV lists of utterances with labels, speakers, splits.

The on-disk format is a comma-separated file with the mandatory header
``id,path,label,speaker,split``. Labels are binary; splits are ``train``,
``valid``, or ``test``. Relative paths are resolved against the manifest's
own directory, so a corpus directory can be moved as a unit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError

HEADER = ["id", "path", "label", "speaker", "split"]
SPLITS = ("train", "valid", "test")


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    path: Path
    label: int
    speaker: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple

    def split(self, name: str) -> list[ManifestRecord]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return [r for r in self.records if r.split == name]

    def overlapping_speakers(self) -> list[str]:
        """Speakers appearing in more than one split, sorted."""
        seen: dict[str, set] = {}
        for record in self.records:
            seen.setdefault(record.speaker, set()).add(record.split)
        return sorted(s for s, splits in seen.items() if len(splits) > 1)


def parse_manifest(path, require_speaker_independent: bool = False) -> DatasetManifest:
    """Load and validate a manifest CSV.

    Raises FormatError (citing the line number) for a bad header, wrong
    column count, non-binary label, unknown split, or duplicate id. With
    ``require_speaker_independent`` set, any speaker occurring in two splits
    is also an error, naming the speaker.
    """
    path = Path(path)
    base = path.parent
    records = []
    ids = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = csv.reader(fh)
        try:
            header = next(rows)
        except StopIteration:
            raise FormatError(f"{path}: empty file, expected header {','.join(HEADER)}") from None
        if [h.strip() for h in header] != HEADER:
            raise FormatError(f"{path} line 1: header must be {','.join(HEADER)}")
        for line_no, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != len(HEADER):
                raise FormatError(f"{path} line {line_no}: expected {len(HEADER)} fields, got {len(row)}")
            rec_id, rec_path, label, speaker, split = (field.strip() for field in row)
            if label not in ("0", "1"):
                raise FormatError(f"{path} line {line_no}: label must be 0 or 1, got {label!r}")
            if split not in SPLITS:
                raise FormatError(f"{path} line {line_no}: unknown split {split!r}")
            if rec_id in ids:
                raise FormatError(
                    f"{path} line {line_no}: duplicate id {rec_id!r} (first on line {ids[rec_id]})"
                )
            ids[rec_id] = line_no
            resolved = Path(rec_path)
            if not resolved.is_absolute():
                resolved = base / resolved
            records.append(ManifestRecord(rec_id, resolved, int(label), speaker, split))
    manifest = DatasetManifest(tuple(records))
    if require_speaker_independent:
        overlap = manifest.overlapping_speakers()
        if overlap:
            raise FormatError(f"{path}: speakers appear in multiple splits: {', '.join(overlap)}")
    return manifest


def write_manifest(manifest: DatasetManifest, path) -> None:
    """Write a manifest CSV; paths inside the manifest directory are relativized."""
    path = Path(path)
    base = path.parent.resolve()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for r in manifest.records:
            rec_path = Path(r.path).resolve()
            try:
                rendered = rec_path.relative_to(base)
            except ValueError:
                rendered = rec_path
            writer.writerow([r.id, str(rendered), r.label, r.speaker, r.split])
