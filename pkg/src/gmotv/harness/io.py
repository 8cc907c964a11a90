"""Plain-text signal files: one sample per line, optional CSV columns."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

_SPLIT = re.compile(r"[,;\s]+")


def load_signal(path, index_column: bool = False) -> np.ndarray:
    """Read a signal from a text or CSV file.

    Blank lines and lines starting with ``#`` are skipped. The first column
    holds the samples unless `index_column` is set, in which case the first
    column is treated as a sample index and the second one is used.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read signal file {path}: {exc.strerror}") from exc
    col = 1 if index_column else 0
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        if len(fields) <= col:
            raise ValueError(f"{path}:{lineno}: expected at least {col + 1} column(s), got {line!r}")
        try:
            value = float(fields[col])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric sample {fields[col]!r} "
                             "(prefix header lines with '#')") from None
        if not np.isfinite(value):
            raise ValueError(f"{path}:{lineno}: non-finite sample {fields[col]!r}")
        samples.append(value)
    if not samples:
        raise ValueError(f"{path}: no samples found")
    return np.array(samples)


def save_signal(path, g, header: str | None = None) -> None:
    lines = [f"# {header}"] if header else []
    lines += [f"{x:.17g}" for x in np.asarray(g, dtype=np.float64)]
    Path(path).write_text("\n".join(lines) + "\n")
