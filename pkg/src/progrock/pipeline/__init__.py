"""Dataset plumbing, model wiring, artifacts, reports and the CLI."""

from .artifact import ModelArtifact
from .dataset import DatasetManifest, SplitSpec, make_split, scan_manifest
from .models import MODEL_NAMES, TrainedModel, TrainOptions, train_model
from .synth import synth_signal, synth_song, write_corpus

__all__ = [
    "DatasetManifest", "MODEL_NAMES", "ModelArtifact", "SplitSpec", "TrainOptions", "TrainedModel",
    "make_split", "scan_manifest", "synth_signal", "synth_song", "train_model", "write_corpus",
]
