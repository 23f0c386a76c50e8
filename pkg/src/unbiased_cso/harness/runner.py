"""Run an experiment end to end: outputs, manifest, failure records."""

from __future__ import annotations

import logging
import time
import traceback
from pathlib import Path

from .config import ExperimentConfig
from .experiments import EXPERIMENT_FUNCS, Bundle
from .outputs import emit_outputs, ensure_writable, versions, write_manifest

log = logging.getLogger(__name__)


class ExperimentFailed(RuntimeError):
    """Raised after partial results and a failure record have been written."""

    def __init__(self, message: str, outputs: list[Path]):
        super().__init__(message)
        self.outputs = outputs


def run_experiment(cfg: ExperimentConfig, out_dir=None, workers: int = 1, fmt: str | None = None) -> tuple[Bundle, list[Path]]:
    """Run ``cfg`` and write its artifacts; returns the bundle and written paths.

    The output directory is checked before any computation. If the run
    fails, whatever tables were completed are still written together with a
    manifest whose ``status`` is ``failed``, and :class:`ExperimentFailed` is raised.
    """
    directory = ensure_writable(out_dir or cfg.output.dir)
    fmt = fmt or cfg.output.format
    seed = cfg.replication.seed
    bundle = Bundle()
    started = time.perf_counter()
    error = None
    try:
        EXPERIMENT_FUNCS[cfg.experiment](cfg, workers, bundle)
    except Exception as exc:  # flushed below, then re-raised as ExperimentFailed
        error = exc
        log.error("experiment %s failed: %s", cfg.experiment, exc)
    elapsed = time.perf_counter() - started

    written = emit_outputs(directory, cfg.experiment, seed, bundle.tables, bundle.plots if error is None else [], fmt)
    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.model_dump(mode="json"),
        "config_sha256": cfg.digest(),
        "master_seed": seed,
        "workers": workers,
        "versions": versions(),
        "runtime_seconds": elapsed,
        "timings": bundle.timings,
        "summary": bundle.summary,
        "outputs": [p.name for p in written],
        "status": "ok" if error is None else "failed",
    }
    if error is not None:
        manifest["failure"] = {
            "type": type(error).__name__,
            "message": str(error),
            "traceback": traceback.format_exception(type(error), error, error.__traceback__),
        }
    written.append(write_manifest(directory, cfg.experiment, seed, manifest))
    if error is not None:
        raise ExperimentFailed(f"{cfg.experiment} failed: {error}", written) from error
    return bundle, written
