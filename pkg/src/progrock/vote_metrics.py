"""Winner-take-all song voting and confusion-matrix metrics.

The positive class is prog throughout.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np

PROG, NONPROG = "prog", "nonprog"


@dataclass(frozen=True)
class SnippetVerdict:
    song_id: str
    snippet_index: int
    p_prog: float

    @property
    def label_pred(self) -> str:
        return snippet_verdict(self.p_prog)


def snippet_verdict(p_prog: float) -> str:
    """prog only when the probability strictly exceeds one half."""
    if not 0.0 <= p_prog <= 1.0:
        raise ValueError(f"probability {p_prog} outside [0, 1]")
    return PROG if p_prog > 0.5 else NONPROG


def tally(verdicts) -> tuple[int, int]:
    prog = sum(1 for v in verdicts if v.label_pred == PROG)
    return prog, len(verdicts) - prog


def song_vote(verdicts: list[SnippetVerdict]) -> str:
    """Majority of snippet labels; a tie goes to nonprog."""
    if not verdicts:
        raise ValueError("cannot vote on an empty verdict list")
    songs = {v.song_id for v in verdicts}
    if len(songs) != 1:
        raise ValueError(f"verdicts span {len(songs)} songs")
    prog, nonprog = tally(verdicts)
    return PROG if prog > nonprog else NONPROG


@dataclass
class ConfusionMatrix:
    tp: int = 0  # actual prog, predicted prog
    fn: int = 0  # actual prog, predicted nonprog
    fp: int = 0  # actual nonprog, predicted prog
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def add(self, actual: str, predicted: str) -> None:
        if actual == PROG:
            if predicted == PROG:
                self.tp += 1
            else:
                self.fn += 1
        elif predicted == PROG:
            self.fp += 1
        else:
            self.tn += 1

    def as_rows(self) -> list[list[int]]:
        """[[tp, fn], [fp, tn]]: rows actual prog/nonprog, columns predicted prog/nonprog."""
        return [[self.tp, self.fn], [self.fp, self.tn]]


def metrics(cm: ConfusionMatrix) -> dict[str, float]:
    if cm.total <= 0:
        raise ValueError("empty confusion matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else 0.0
    recall = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"accuracy": accuracy, "precision": precision, "recall": recall, "f1": f1}


@dataclass
class EvaluationReport:
    snippet_cm: ConfusionMatrix
    song_cm: ConfusionMatrix
    snippet_metrics: dict
    song_metrics: dict
    songs: list[dict] = field(default_factory=list)     # per-song tallies
    snippets: list[dict] = field(default_factory=list)  # per-snippet verdict log
    misclassified: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "snippet_confusion": asdict(self.snippet_cm),
            "song_confusion": asdict(self.song_cm),
            "snippet_metrics": self.snippet_metrics,
            "song_metrics": self.song_metrics,
            "songs": self.songs,
            "misclassified_songs": self.misclassified,
        }


def evaluate(p_prog, song_ids, snippet_indices, labels) -> EvaluationReport:
    """Snippet- and song-level evaluation from per-snippet prog probabilities.

    ``labels`` holds each snippet's true song label (``"prog"``/``"nonprog"``).
    Songs are reported in order of first appearance.
    """
    p_prog = np.asarray(p_prog, dtype=np.float64)
    if p_prog.size == 0:
        raise ValueError("cannot evaluate an empty split")
    by_song: "OrderedDict[str, list[SnippetVerdict]]" = OrderedDict()
    truth: dict[str, str] = {}
    snippet_cm = ConfusionMatrix()
    log = []
    for p, sid, idx, lab in zip(p_prog, song_ids, snippet_indices, labels):
        v = SnippetVerdict(sid, int(idx), float(p))
        if truth.setdefault(sid, lab) != lab:
            raise ValueError(f"song {sid} has inconsistent labels")
        by_song.setdefault(sid, []).append(v)
        snippet_cm.add(lab, v.label_pred)
        log.append({"song_id": sid, "snippet_index": int(idx), "p_prog": float(p),
                    "predicted": v.label_pred, "actual": lab})

    song_cm = ConfusionMatrix()
    songs, wrong = [], []
    for sid, verdicts in by_song.items():
        predicted = song_vote(verdicts)
        prog, nonprog = tally(verdicts)
        song_cm.add(truth[sid], predicted)
        songs.append({"song_id": sid, "actual": truth[sid], "predicted": predicted,
                      "prog_votes": prog, "nonprog_votes": nonprog})
        if predicted != truth[sid]:
            wrong.append(sid)
    return EvaluationReport(snippet_cm, song_cm, metrics(snippet_cm), metrics(song_cm), songs, log, wrong)
