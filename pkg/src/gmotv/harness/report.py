"""results.csv / results.md writers and per-cell figures."""

from __future__ import annotations

import csv
import math
from pathlib import Path

from .experiment import ResultRow, ResultTable
from .plotting import isnr_figure, overlay_figure, savefig

CSV_COLUMNS = ("level_db", "blur_variance", "method", "lambda", "isnr_db", "segments")


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_csv(table: ResultTable, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in table.rows:
            w.writerow([_fmt(r.level_db), _fmt(r.blur_variance), r.method,
                        _fmt(r.lam), _fmt(r.isnr_db), r.segments])
    return path


def read_csv(path, mode: str | None = None) -> ResultTable:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
        rows = [ResultRow(float(d["level_db"]), float(d["blur_variance"]), d["method"],
                          float(d["lambda"]), float(d["isnr_db"]), int(d["segments"]))
                for d in reader]
    if mode is None:
        mode = "deblur" if any(r.blur_variance > 0 for r in rows) else "denoise"
    return ResultTable(mode, rows)


def _level_label(mode):
    return "SNR" if mode == "denoise" else "BSNR"


def markdown(table: ResultTable) -> str:
    """Grid layout: one row per (level, variance), one column per method."""
    methods = table.methods
    deblur = table.mode == "deblur"
    head = [_level_label(table.mode)] + (["blur var"] if deblur else []) + methods
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    notes = []
    for level in table.levels:
        for var in table.variances:
            cells = [f"{level:g}"] + ([f"{var:g}"] if deblur else [])
            for m in methods:
                try:
                    r = table.get(level, var, m)
                except KeyError:
                    cells.append("")
                    continue
                if r.missing or math.isnan(r.isnr_db):
                    cells.append("n/a")
                    if r.reason:
                        notes.append(f"- {m} at {level:g} dB, variance {var:g}: {r.reason}")
                else:
                    cells.append(f"{r.isnr_db:.2f}")
            lines.append("| " + " | ".join(cells) + " |")
    text = "ISNR (dB), averaged over segments, lambda tuned per cell.\n\n" + "\n".join(lines) + "\n"
    if notes:
        text += "\nMissing cells:\n" + "\n".join(notes) + "\n"
    return text


def cell_plot_name(method: str, level: float, variance: float) -> str:
    return f"{method}_L{level:g}_V{variance:g}.svg"


def plot_summary(table: ResultTable, out_dir) -> list:
    """ISNR-vs-level figure per blur variance."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for var in table.variances:
        series = {}
        for m in table.methods:
            rows = [table.get(level, var, m) for level in table.levels]
            series[m] = [r.isnr_db for r in rows]
        title = "" if table.mode == "denoise" else f"blur variance {var:g}"
        fig = isnr_figure(table.levels, series, f"{_level_label(table.mode)} (dB)", title)
        path = out_dir / f"isnr_V{var:g}.svg"
        savefig(fig, path)
        paths.append(path)
    return paths


def emit_outputs(table: ResultTable, out_dir) -> list:
    """Write results.csv, results.md and one overlay figure per finished cell."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [write_csv(table, out_dir / "results.csv")]
        md = out_dir / "results.md"
        md.write_text(markdown(table))
        written.append(md)
        for (level, var, method), (g, f, gh) in table.examples.items():
            title = f"{method}, {_level_label(table.mode)} {level:g} dB"
            if var > 0:
                title += f", blur variance {var:g}"
            path = out_dir / cell_plot_name(method, level, var)
            savefig(overlay_figure(g, f, gh, title), path)
            written.append(path)
    except OSError as exc:
        raise OSError(f"cannot write outputs to {out_dir}: {exc}") from exc
    return written
