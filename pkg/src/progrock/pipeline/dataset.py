"""Song manifests and deterministic stratified train/validation splits."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from math import floor
from pathlib import Path

import numpy as np

from ..errors import DatasetError

log = logging.getLogger(__name__)

AUDIO_SUFFIXES = {".wav", ".wave"}
TRAIN, VALIDATION = "train", "validation"


@dataclass
class ManifestEntry:
    song_id: str
    path: str
    label: str  # "prog" | "nonprog" | "unlabeled"


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    root: str = ""

    def __post_init__(self):
        ids = [e.song_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise DatasetError("duplicate song ids in manifest")

    def labels(self) -> dict[str, str]:
        return {e.song_id: e.label for e in self.entries}

    def to_json(self) -> str:
        doc = {"root": self.root,
               "entries": [{"song_id": e.song_id, "path": e.path, "label": e.label} for e in self.entries]}
        return json.dumps(doc, indent=2) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        doc = json.loads(Path(path).read_text())
        return cls([ManifestEntry(**e) for e in doc["entries"]], doc.get("root", ""))


def _audio_files(directory: Path) -> list[Path]:
    files = []
    for p in sorted(directory.rglob("*")):
        if not p.is_file():
            continue
        if p.suffix.lower() in AUDIO_SUFFIXES:
            files.append(p)
        else:
            log.warning("skipping non-audio file %s", p)
    return files


def scan_manifest(prog_dir, nonprog_dir) -> DatasetManifest:
    """One entry per WAVE file, labelled by directory, in lexicographic order.

    Song ids are ``<label>/<path relative to its directory>`` so equal file
    names in the two directories stay distinct.
    """
    entries = []
    for label, directory in (("prog", Path(prog_dir)), ("nonprog", Path(nonprog_dir))):
        if not directory.is_dir():
            raise FileNotFoundError(f"{directory} is not a directory")
        files = _audio_files(directory)
        if not files:
            raise DatasetError(f"no audio files under {directory}")
        for p in files:
            entries.append(ManifestEntry(f"{label}/{p.relative_to(directory).as_posix()}", str(p), label))
    root = os.path.commonpath([str(Path(prog_dir).resolve()), str(Path(nonprog_dir).resolve())])
    return DatasetManifest(entries, root)


@dataclass
class SplitSpec:
    seed: int
    fraction_validation: float
    assignment: dict[str, str]

    def songs(self, partition: str) -> list[str]:
        return [s for s, part in self.assignment.items() if part == partition]

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "fraction_validation": self.fraction_validation,
                           "assignment": self.assignment}, indent=2) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def read(cls, path) -> "SplitSpec":
        doc = json.loads(Path(path).read_text())
        return cls(doc["seed"], doc["fraction_validation"], doc["assignment"])


def make_split(manifest: DatasetManifest, seed: int = 0, fraction: float = 0.2) -> SplitSpec:
    """Send ``round(fraction * n_class)`` songs of each class to validation."""
    if len(manifest.entries) < 5:
        raise DatasetError("need at least 5 songs to split")
    rng = np.random.default_rng(seed)
    chosen: set[str] = set()
    for label in ("prog", "nonprog"):
        ids = [e.song_id for e in manifest.entries if e.label == label]
        if not ids:
            raise DatasetError(f"no {label} songs in manifest")
        n_val = int(floor(fraction * len(ids) + 0.5))
        perm = rng.permutation(len(ids))
        chosen.update(ids[i] for i in perm[:n_val])
    assignment = {e.song_id: (VALIDATION if e.song_id in chosen else TRAIN) for e in manifest.entries}
    return SplitSpec(seed, fraction, assignment)
