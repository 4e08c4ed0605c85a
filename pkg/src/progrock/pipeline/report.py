"""Evaluation reports on disk: JSON, CSV tables, SVG confusion heatmaps,
and a cross-run comparison table."""

from __future__ import annotations

import csv
import io
import json
from html import escape
from pathlib import Path

from ..vote_metrics import ConfusionMatrix, EvaluationReport

REPORT_JSON = "report.json"
METRIC_ROWS = ("accuracy", "precision", "recall", "f1")
METRIC_LABELS = {"accuracy": "Accuracy", "precision": "Precision (Prog)",
                 "recall": "Recall (Prog)", "f1": "F1 (Prog)"}


def _csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({c: r[c] for c in columns})
    return buf.getvalue()


def confusion_svg(cm: ConfusionMatrix, title: str) -> str:
    """2 x 2 heatmap; rows actual prog/nonprog, columns predicted prog/nonprog."""
    cells = cm.as_rows()
    peak = max(max(r) for r in cells) or 1
    size, left, top = 110, 120, 60
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{left + 2 * size + 20}" '
           f'height="{top + 2 * size + 20}" font-family="sans-serif" font-size="13">',
           f'<text x="{left + size}" y="20" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<text x="{left + size}" y="45" text-anchor="middle">predicted</text>']
    names = ("prog", "nonprog")
    for j, name in enumerate(names):
        out.append(f'<text x="{left + j * size + size // 2}" y="{top - 4}" text-anchor="middle">{name}</text>')
    for i, name in enumerate(names):
        y = top + i * size
        out.append(f'<text x="{left - 8}" y="{y + size // 2}" text-anchor="end">actual {name}</text>')
        for j in range(2):
            v = cells[i][j]
            shade = int(round(255 - 200 * v / peak))
            fill = f"rgb({shade},{shade},255)"
            ink = "white" if v / peak > 0.6 else "black"
            x = left + j * size
            out.append(f'<rect x="{x}" y="{y}" width="{size}" height="{size}" fill="{fill}" stroke="black"/>')
            out.append(f'<text x="{x + size // 2}" y="{y + size // 2 + 5}" text-anchor="middle" '
                       f'fill="{ink}" font-size="18">{v}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_report(report: EvaluationReport, out_dir, extra: dict | None = None) -> list[Path]:
    """report.json, songs.csv, snippets.csv and two SVG heatmaps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = dict(extra or {})
    doc.update(report.to_dict())
    files = {
        REPORT_JSON: json.dumps(doc, indent=2, sort_keys=True) + "\n",
        "songs.csv": _csv(report.songs, ["song_id", "actual", "predicted", "prog_votes", "nonprog_votes"]),
        "snippets.csv": _csv([dict(r, p_prog=repr(r["p_prog"])) for r in report.snippets],
                             ["song_id", "snippet_index", "p_prog", "predicted", "actual"]),
        "snippet_confusion.svg": confusion_svg(report.snippet_cm, "Confusion matrix (snippets)"),
        "song_confusion.svg": confusion_svg(report.song_cm, "Confusion matrix (songs)"),
    }
    written = []
    for name, text in files.items():
        (out / name).write_text(text)
        written.append(out / name)
    return written


def collect_runs(runs_dir) -> list[dict]:
    """Every report.json under ``runs_dir``, sorted by relative path."""
    root = Path(runs_dir)
    runs = []
    for path in sorted(root.rglob(REPORT_JSON)):
        doc = json.loads(path.read_text())
        doc["run"] = path.parent.relative_to(root).as_posix() or "."
        runs.append(doc)
    return runs


def comparison_rows(runs: list[dict]) -> list[dict]:
    rows = []
    for r in runs:
        row = {"run": r["run"], "model": r.get("model", "?"), "split": r.get("split", "?")}
        for level in ("snippet", "song"):
            for m in METRIC_ROWS:
                row[f"{level}_{m}"] = round(100.0 * r[f"{level}_metrics"][m], 2)
            cm = r[f"{level}_confusion"]
            for k in ("tp", "fn", "fp", "tn"):
                row[f"{level}_{k}"] = cm[k]
        rows.append(row)
    return rows


def comparison_table(rows: list[dict]) -> str:
    """Plain-text table: one column per run, metric rows as in a results chapter."""
    if not rows:
        return "no runs found\n"
    headers = ["Metric"] + [f"{r['model']} ({r['run']})" for r in rows]
    body = []
    for level in ("song", "snippet"):
        for m in METRIC_ROWS:
            body.append([f"{METRIC_LABELS[m]}, {level}s (%)"] + [f"{r[f'{level}_{m}']:.2f}" for r in rows])
        body.append([f"Confusion {level}s [tp fn; fp tn]"]
                    + [f"[{r[f'{level}_tp']} {r[f'{level}_fn']}; {r[f'{level}_fp']} {r[f'{level}_tn']}]"
                       for r in rows])
    widths = [max(len(line[i]) for line in [headers] + body) for i in range(len(headers))]
    fmt = lambda line: "  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip()
    sep = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(headers), sep] + [fmt(b) for b in body]) + "\n"


def write_comparison(runs_dir) -> tuple[str, list[dict]]:
    runs = collect_runs(runs_dir)
    rows = comparison_rows(runs)
    root = Path(runs_dir)
    if rows:
        (root / "comparison.csv").write_text(_csv(rows, list(rows[0])))
    (root / "comparison.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")
    table = comparison_table(rows)
    (root / "comparison.txt").write_text(table)
    return table, rows
