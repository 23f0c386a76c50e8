"""CSV tables, SVG plots and the run manifest."""

from __future__ import annotations

import csv
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence


class OutputDirError(OSError):
    pass


@dataclass
class Table:
    name: str
    header: Sequence[str]
    rows: list[Sequence[Any]] = field(default_factory=list)


@dataclass
class Plot:
    """A line plot: ``series`` maps a label to ``(x, y)`` sequences."""

    name: str
    title: str
    xlabel: str
    ylabel: str
    series: dict[str, tuple[Sequence[float], Sequence[float]]]
    loglog: bool = False
    logy: bool = False


def ensure_writable(directory) -> Path:
    """Create ``directory`` if needed and prove it is writable, before any work starts."""
    path = Path(directory)
    try:
        path.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=path, prefix=".probe-", delete=True):
            pass
    except OSError as exc:
        raise OutputDirError(f"output directory {path} is not writable: {exc}") from exc
    return path


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header: Sequence[str], rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def write_plot(path, plot: Plot) -> Path | None:
    """Static SVG; returns ``None`` when there is nothing to draw."""
    if not any(len(x) for x, _ in plot.series.values()):
        return None
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed hash salt and no date metadata keep the SVG bytes reproducible
    with matplotlib.rc_context({"svg.hashsalt": "unbiased-cso", "path.simplify": False}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, (x, y) in plot.series.items():
            ax.plot(x, y, marker="o", markersize=3, label=label)
        if plot.loglog:
            ax.set_xscale("log")
            ax.set_yscale("log")
        elif plot.logy:
            ax.set_yscale("log")
        ax.set_title(plot.title)
        ax.set_xlabel(plot.xlabel)
        ax.set_ylabel(plot.ylabel)
        if len(plot.series) > 1:
            ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return Path(path)


def versions() -> dict:
    import numba
    import numpy
    import pydantic
    import scipy

    from .. import __version__

    return {
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "pydantic": pydantic.VERSION,
        "unbiased_cso": __version__,
    }


def file_stem(experiment: str, seed: int) -> str:
    return f"{experiment}_seed{seed}"


def emit_outputs(directory, experiment: str, seed: int, tables: Sequence[Table], plots: Sequence[Plot], fmt: str) -> list[Path]:
    directory = Path(directory)
    stem = file_stem(experiment, seed)
    written = [write_csv(directory / f"{stem}_{t.name}.csv", t.header, t.rows) for t in tables]
    if fmt == "csv+plot":
        for plot in plots:
            out = write_plot(directory / f"{stem}_{plot.name}.svg", plot)
            if out is not None:
                written.append(out)
    return written


def write_manifest(directory, experiment: str, seed: int, payload: dict) -> Path:
    path = Path(directory) / f"{file_stem(experiment, seed)}_manifest.json"
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
    os.replace(tmp, path)
    return path
