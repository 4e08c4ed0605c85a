"""Audio file -> snippet tensors, serially or with a process pool."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor

from ..audio_io import load_for_pipeline, segment
from ..tensorize import LABEL_CODES, FeatureConfig, SnippetTensor, assemble
from .dataset import DatasetManifest

log = logging.getLogger(__name__)


def song_tensors(path, song_id: str, label: str = "unlabeled",
                 config: FeatureConfig | None = None) -> list[SnippetTensor]:
    cfg = config or FeatureConfig()
    buf = load_for_pipeline(path, cfg.sample_rate, cfg.trim_top_db)
    snippets = segment(buf, cfg.snippet_seconds, cfg.hop_seconds, song_id)
    if not snippets:
        log.warning("%s yields no complete %.1f s snippet; skipped", path, cfg.snippet_seconds)
    code = LABEL_CODES[label]
    return [assemble(s, code, cfg) for s in snippets]


def _job(args):
    return song_tensors(*args)


def extract_manifest(manifest: DatasetManifest, config: FeatureConfig | None = None,
                     jobs: int = 1) -> list[SnippetTensor]:
    """Tensors for every song in manifest order. Output does not depend on ``jobs``."""
    cfg = config or FeatureConfig()
    work = [(e.path, e.song_id, e.label, cfg) for e in manifest.entries]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_song = list(pool.map(_job, work))
    else:
        per_song = [_job(w) for w in work]
    return [t for song in per_song for t in song]
