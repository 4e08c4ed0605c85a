"""Command-line workflow: extract -> split -> train -> evaluate / predict -> report.

Exit codes: 0 ok, 2 usage, 3 missing input, 4 unreadable or wrong-version
file, 5 configuration or shape mismatch, 6 dataset problem.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from ..errors import (ArtifactFormatError, AudioFormatError, CacheCorruptError, CacheFormatError,
                      ConfigurationError, DatasetError, UnsupportedAudioError)
from ..tensorize import (LABEL_NAMES, UNLABELED, CacheIndex, FeatureConfig, index_path, read_cache,
                         write_cache)
from ..vote_metrics import evaluate, snippet_verdict
from .artifact import ModelArtifact
from .dataset import TRAIN, VALIDATION, DatasetManifest, SplitSpec, make_split, scan_manifest
from .extract import extract_manifest, song_tensors
from .models import MODEL_NAMES, TrainedModel, TrainOptions, train_model
from .report import write_comparison, write_report

log = logging.getLogger("progrock")

EXIT_MISSING, EXIT_FORMAT, EXIT_CONFIG, EXIT_DATASET = 3, 4, 5, 6
_EXIT_FOR = [
    (FileNotFoundError, EXIT_MISSING),
    ((ArtifactFormatError, CacheFormatError, CacheCorruptError, AudioFormatError,
      UnsupportedAudioError), EXIT_FORMAT),
    (ConfigurationError, EXIT_CONFIG),
    (DatasetError, EXIT_DATASET),
]


def manifest_path(cache) -> Path:
    return Path(cache).with_suffix(".manifest.json")


def _require(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{p} does not exist")
    return p


def _feature_config(path) -> FeatureConfig:
    if path is None:
        return FeatureConfig()
    doc = json.loads(_require(path).read_text())
    doc = doc.get("features", doc)
    unknown = set(doc) - set(FeatureConfig.__dataclass_fields__)
    if unknown:
        raise ConfigurationError(f"unknown feature settings: {', '.join(sorted(unknown))}")
    return FeatureConfig.from_dict(doc)


def _load_cache(path):
    tensors = read_cache(_require(path))
    idx_file = index_path(path)
    index = CacheIndex.read(idx_file) if idx_file.exists() else None
    return tensors, index


def _load_model(path) -> TrainedModel:
    return TrainedModel.from_artifact(ModelArtifact.load(_require(path)))


def cmd_extract(args) -> int:
    cfg = _feature_config(args.config)
    manifest = scan_manifest(_require(args.prog_dir), _require(args.nonprog_dir))
    tensors = extract_manifest(manifest, cfg, args.jobs)
    if not tensors:
        raise DatasetError("no song produced a complete snippet")
    have = {t.song_id for t in tensors}
    kept = [e for e in manifest.entries if e.song_id in have]
    manifest = DatasetManifest(kept, manifest.root)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_cache(tensors, out)
    CacheIndex.from_tensors(tensors, cfg).write(index_path(out))
    manifest.write(manifest_path(out))
    log.info("wrote %d snippets from %d songs to %s", len(tensors), len(kept), out)
    return 0


def cmd_split(args) -> int:
    manifest = DatasetManifest.read(_require(args.manifest))
    spec = make_split(manifest, args.seed, args.fraction)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    spec.write(args.out)
    return 0


def cmd_train(args) -> int:
    tensors, index = _load_cache(args.cache)
    split = SplitSpec.read(_require(args.split))
    train_songs = set(split.songs(TRAIN))
    unknown = {t.song_id for t in tensors} - set(split.assignment)
    if unknown:
        raise DatasetError(f"{len(unknown)} cached songs are missing from the split, e.g. {sorted(unknown)[0]}")
    train_set = [t for t in tensors if t.song_id in train_songs and t.label != UNLABELED]
    opts = TrainOptions(pca=args.pca, rounds=args.rounds, seed=args.seed, epochs=args.epochs,
                        batch_size=args.batch_size, n_jobs=args.jobs)
    features = index.feature_config if index else FeatureConfig().to_dict()
    model = train_model(args.model, train_set, opts,
                        {"feature_config": features, "split": split.assignment,
                         "split_seed": split.seed})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    model.to_artifact().save(out)
    if model.kind == "neural":
        with open(out.with_suffix(".loss.csv"), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "loss", "learning_rate"])
            for i, (loss, rate) in enumerate(zip(model.loss_trace, model.learning_rates)):
                w.writerow([i, repr(float(loss)), repr(float(rate))])
    return 0


def cmd_evaluate(args) -> int:
    model = _load_model(args.artifact)
    tensors, index = _load_cache(args.cache)
    expected = model.config.get("feature_config")
    if index is not None and expected is not None and index.feature_config != expected:
        raise ConfigurationError("cache was extracted with a different feature configuration than the model")
    assignment = model.config.get("split", {})
    if args.split == VALIDATION:
        chosen = {s for s, part in assignment.items() if part == VALIDATION}
        train_songs = {s for s, part in assignment.items() if part == TRAIN}
        if chosen & train_songs:
            raise DatasetError("split leaks songs between partitions")
    else:
        chosen = {t.song_id for t in tensors}
    subset = [t for t in tensors if t.song_id in chosen and t.label != UNLABELED]
    if not subset:
        raise DatasetError(f"no labelled snippets in the {args.split} split")
    if args.split == VALIDATION:
        assert not ({t.song_id for t in subset} & train_songs), "training song in validation report"
    p = model.predict_proba(subset)
    report = evaluate(p, [t.song_id for t in subset], [t.snippet_index for t in subset],
                      [LABEL_NAMES[t.label] for t in subset])
    write_report(report, args.report, {"model": model.name, "split": args.split,
                                       "n_snippets": len(subset), "n_songs": len(report.songs)})
    print(json.dumps({"model": model.name, "split": args.split,
                      "song_accuracy": report.song_metrics["accuracy"],
                      "snippet_accuracy": report.snippet_metrics["accuracy"]}, sort_keys=True))
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args.artifact)
    cfg = FeatureConfig.from_dict(model.config.get("feature_config", {}))
    audio = _require(args.audio)
    tensors = song_tensors(audio, audio.name, "unlabeled", cfg)
    if not tensors:
        raise DatasetError(f"{audio} is shorter than one {cfg.snippet_seconds:g} s snippet after trimming")
    p = model.predict_proba(tensors)
    snippets = [{"snippet_index": t.snippet_index, "p_prog": float(q), "predicted": snippet_verdict(float(q))}
                for t, q in zip(tensors, p)]
    prog = sum(s["predicted"] == "prog" for s in snippets)
    doc = {"audio": str(audio), "model": model.name, "snippets": snippets,
           "prog_votes": prog, "nonprog_votes": len(snippets) - prog,
           "verdict": "prog" if prog > len(snippets) - prog else "nonprog"}
    print(json.dumps(doc, indent=2))
    return 0


def cmd_report(args) -> int:
    table, rows = write_comparison(_require(args.runs))
    if not rows:
        raise DatasetError(f"no report.json files under {args.runs}")
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="progrock", description="Progressive rock song classifier")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="decode songs and write the snippet feature cache")
    p.add_argument("--prog-dir", required=True)
    p.add_argument("--nonprog-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON file of feature settings")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("split", help="stratified song-level train/validation split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fraction", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit a model on the training partition")
    p.add_argument("--cache", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--pca", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="snippet and song metrics for a cached split")
    p.add_argument("--artifact", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--split", choices=(VALIDATION, "all"), default=VALIDATION)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="classify one audio file")
    p.add_argument("--artifact", required=True)
    p.add_argument("--audio", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("report", help="compare evaluation runs")
    p.add_argument("--runs", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except Exception as exc:
        for kinds, code in _EXIT_FOR:
            if isinstance(exc, kinds):
                print(f"progrock {args.command}: {exc}", file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
