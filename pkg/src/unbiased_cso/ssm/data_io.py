"""Replayable dataset files: ``#``-prefixed header lines, then a CSV table."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .model import GAUSSIAN, SsmData


def write_dataset(path: str | Path, data: SsmData, xi_true=None, m=None, seed: int | None = None) -> None:
    meta = dict(data.meta)
    if xi_true is not None:
        meta["xi"] = [float(v) for v in xi_true]
    if m is not None:
        meta["m"] = m
    if seed is not None:
        meta["seed"] = int(seed)
    buf = io.StringIO()
    buf.write(f"# xi_true={json.dumps(meta.get('xi'))}\n")
    buf.write(f"# m={json.dumps(meta.get('m'))}\n")
    buf.write(f"# seed={json.dumps(meta.get('seed'))}\n")
    buf.write(f"# x0={data.x0!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    has_x = data.x_true is not None
    writer.writerow(["y", "x_true"] if has_x else ["y"])
    for n in range(data.T):
        writer.writerow([repr(float(data.y[n])), repr(float(data.x_true[n]))] if has_x else [repr(float(data.y[n]))])
    Path(path).write_text(buf.getvalue())


def read_dataset(path: str | Path) -> SsmData:
    lines = Path(path).read_text().splitlines()
    header = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.DictReader(body))
    y = np.array([float(r["y"]) for r in rows])
    x_true = np.array([float(r["x_true"]) for r in rows]) if rows and "x_true" in rows[0] else None
    m = json.loads(header.get("m", "null"))
    meta = {"xi": json.loads(header.get("xi_true", "null")), "m": m, "seed": json.loads(header.get("seed", "null"))}
    if m is not None and m != GAUSSIAN:
        meta["m"] = int(m) if float(m).is_integer() else float(m)
    return SsmData(y=y, x0=float(header.get("x0", "0.0")), x_true=x_true, meta=meta)
