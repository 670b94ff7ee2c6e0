"""Small shared helpers: seeded substreams, float formatting, CSV output."""

from __future__ import annotations

import csv
import hashlib
from pathlib import Path

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    """Named random substream derived from a single master seed.

    Every stochastic component (one per trained network, one for batch
    shuffling, ...) draws from its own stream so that adding or removing a
    component never perturbs the others.
    """
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest, "big"))


def fmt(x) -> str:
    """Format a float with 17 significant digits (exact float64 round-trip)."""
    return f"{float(x):.17g}"


def config_digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def write_csv(path, header, rows, comment: str | None = None) -> None:
    """Write a CSV file; floats are serialised via :func:`fmt`.

    ``comment`` becomes a leading ``#`` line (used to embed the config hash
    and seed into every output file).
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV written by :func:`write_csv`, skipping comment lines."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]
