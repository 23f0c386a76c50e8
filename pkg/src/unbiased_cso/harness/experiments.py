"""Experiment engine.

Every unit of replicated work (one averaged estimate, one ladder, one
stochastic approximation run) is a picklable task keyed by its position in
the design, and draws from the random stream named by that key. Tasks are
mapped in order, so results, and hence output bytes, do not depend on the
number of workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Sequence

import numpy as np

from ..estimator import composite_ladder, estimate_H_averaged
from ..msa import Reparameterization, StepSchedule, msa_run
from ..rng import generator
from .config import ExperimentConfig, MsvModelConfig, SsmModelConfig, ToyModelConfig
from .outputs import Plot, Table
from .report import MseReport, decompose_mse, loglog_slope

SSM_NAMES = ("sigma", "mu", "Sigma")
# beyond this many degrees of freedom the Student-t score is treated as Gaussian
KALMAN_DOF_THRESHOLD = 1000


@dataclass
class Bundle:
    """Results accumulated while an experiment runs (flushed even on failure)."""

    tables: list[Table] = field(default_factory=list)
    plots: list[Plot] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def parallel_map(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))


# ------------------------------------------------------------------ builders


def build_ssm(mc: SsmModelConfig):
    from ..ssm import PgasConfig, SsmParams, cso_adapter, read_dataset, simulate

    if mc.data_file:
        data = read_dataset(mc.data_file)
    else:
        data = simulate(SsmParams(*mc.xi), mc.observation, mc.T, generator(mc.data_seed, "ssm-data"), mc.x0)
    model = cso_adapter(
        data,
        models=mc.model_set,
        cfg=PgasConfig(n_particles=mc.n_particles),
        sweeps_per_step=mc.sweeps_per_step,
        init_sweeps=mc.init_sweeps,
        per_observation=mc.per_observation,
    )
    return data, model


def build_toy(mc: ToyModelConfig):
    from ..toy import DiscreteCso

    return DiscreteCso(np.array(mc.transition), np.array(mc.initial), np.array(mc.g_table))


def build_msv(mc: MsvModelConfig, seed: int):
    """Instance, CSO model and initial outer state."""
    from ..msv import (
        PayoffConfig,
        cso_adapter_f1,
        cso_adapter_f2,
        initial_state,
        make_instance,
        read_instance,
    )

    if mc.instance_file:
        inst = read_instance(mc.instance_file)
    else:
        inst = make_instance(mc.p, mc.K, mc.history, mc.horizon, mc.instance_seed, mc.holdout)
    payoff = PayoffConfig(mc.zeta, inst.history, inst.horizon, mc.predictive_batch, mc.independent_means)
    state = initial_state(inst, generator(seed, "msv-init"), burn=mc.burn)
    if mc.framework == 1:
        model = cso_adapter_f1(inst.log_returns, payoff)
        z0 = model.initial_outer(state, generator(seed, "msv-outer0"))
    else:
        model = cso_adapter_f2(inst.log_returns, state, payoff)
        z0 = state.params.theta_tilde()
    return inst, model, z0


@lru_cache(maxsize=4)
def _context(cfg_json: str) -> dict:
    """Per-process cache of the objects a task needs, rebuilt from the config."""
    cfg = ExperimentConfig.model_validate_json(cfg_json)
    mc = cfg.model
    ctx: dict[str, Any] = {"cfg": cfg, "dist": cfg.estimator.distribution_object()}
    if isinstance(mc, SsmModelConfig):
        data, model = build_ssm(mc)
        ctx.update(data=data, model=model, z=mc.observation, xi=np.array(mc.xi))
    elif isinstance(mc, ToyModelConfig):
        ctx.update(model=build_toy(mc), z=mc.z, xi=np.array([mc.xi]))
    else:
        inst, model, z0 = build_msv(mc, cfg.replication.seed)
        ctx.update(instance=inst, model=model, z=z0)
    return ctx


# --------------------------------------------------------------------- tasks


def _averaged_estimate_task(task) -> tuple[np.ndarray, float]:
    cfg_json, label, S, r = task
    ctx = _context(cfg_json)
    est = ctx["cfg"].estimator
    rng = generator(ctx["cfg"].replication.seed, label, S, r)
    start = time.perf_counter()
    value = estimate_H_averaged(ctx["model"], ctx["z"], ctx["xi"], ctx["dist"], S, rng, est.weighting)
    return value, time.perf_counter() - start


def _ladder_task(task) -> np.ndarray:
    cfg_json, r = task
    ctx = _context(cfg_json)
    cfg = ctx["cfg"]
    rng = generator(cfg.replication.seed, "ladder", r)
    return composite_ladder(ctx["model"], ctx["z"], ctx["xi"], cfg.max_level, rng, cfg.estimator.weighting)


def _msa_setup(cfg: ExperimentConfig, ctx: dict):
    mc, mcfg = cfg.model, cfg.msa
    if isinstance(mc, SsmModelConfig):
        k = 3
        names = SSM_NAMES
        default_transforms = ("log", "identity", "log")
        xi0 = mcfg.xi0 if mcfg.xi0 is not None else list(mc.xi)
    else:
        k = ctx["instance"].p
        names = tuple(f"w{i}" for i in range(k))
        default_transforms = ("identity",) * k
        xi0 = mcfg.xi0 if mcfg.xi0 is not None else [0.0] * k
    if isinstance(mcfg.gamma0, dict):
        unknown = set(mcfg.gamma0) - set(names)
        if unknown:
            raise ValueError(f"msa.gamma0 names unknown parameters {sorted(unknown)}; known: {list(names)}")
        gamma0 = dict(mcfg.gamma0)
        blocks = names
    else:
        gamma0 = {"default": float(mcfg.gamma0)}
        blocks = ("default",) * k
    transforms = tuple(mcfg.transforms) if mcfg.transforms else default_transforms
    if len(xi0) != k or len(transforms) != k:
        raise ValueError(f"msa.xi0 and msa.transforms need {k} entries")
    return (
        np.array(xi0, dtype=float),
        StepSchedule(gamma0, mcfg.offset, mcfg.exponent),
        Reparameterization(transforms),
        blocks,
        names,
    )


def _msa_task(task):
    """One stochastic approximation run; returns iterates and objectives."""
    cfg_json, label, run, iterations = task
    ctx = _context(cfg_json)
    cfg = ctx["cfg"]
    xi0, schedule, reparam, blocks, _ = _msa_setup(cfg, ctx)
    z0 = ctx["z"] if isinstance(cfg.model, MsvModelConfig) else cfg.model.observation
    traj = msa_run(
        ctx["model"],
        xi0,
        z0,
        schedule,
        reparam,
        ctx["dist"],
        cfg.msa.S,
        iterations,
        generator(cfg.replication.seed, label, run),
        blocks=blocks,
        weighting_mode=cfg.estimator.weighting,
        clip=cfg.msa.clip,
        outer_steps_per_update=cfg.msa.outer_steps_per_update,
        level_cap=cfg.estimator.level_cap,
        summarize_z=lambda z: "",
    )
    return traj.xi, traj.objective


# --------------------------------------------------------------- experiments


def _reference(cfg: ExperimentConfig, cfg_json: str, workers: int, bundle: Bundle) -> tuple[np.ndarray, np.ndarray | None]:
    """Reference vector for the MSE decomposition and its MC standard error (``None`` if exact)."""
    ctx = _context(cfg_json)
    mc, dist = cfg.model, ctx["dist"]
    if isinstance(mc, ToyModelConfig):
        from ..toy import MAX_ENUMERATION_LEVEL, exact_H, exhaustive_estimator_mean

        if dist.max_level is not None and dist.max_level <= MAX_ENUMERATION_LEVEL:
            bundle.summary["reference_kind"] = "exhaustive estimator mean"
            value = exhaustive_estimator_mean(ctx["model"], mc.z, mc.xi, dist, cfg.estimator.weighting)
        else:
            bundle.summary["reference_kind"] = "exact H"
            value = exact_H(ctx["model"], mc.z, mc.xi)
        return np.array([value]), None
    from ..ssm import GAUSSIAN, kalman_score

    m = mc.observation
    if m == GAUSSIAN or m >= KALMAN_DOF_THRESHOLD:
        bundle.summary["reference_kind"] = "kalman score"
        scale = 1.0 / ctx["data"].T if mc.per_observation else 1.0
        return scale * kalman_score(ctx["data"], mc.xi), None
    n = cfg.estimator.reference_estimates
    bundle.summary["reference_kind"] = f"self-reference from {n} estimates"
    values = np.array([v for v, _ in parallel_map(_averaged_estimate_task, [(cfg_json, "reference", 1, r) for r in range(n)], workers)])
    return values.mean(axis=0), values.std(axis=0, ddof=1) / math.sqrt(n)


def rel_mse_vs_s(cfg: ExperimentConfig, workers: int, bundle: Bundle) -> None:
    cfg_json = cfg.model_dump_json()
    reference, reference_se = _reference(cfg, cfg_json, workers, bundle)
    bundle.summary["reference"] = reference.tolist()
    bundle.summary["reference_se"] = None if reference_se is None else reference_se.tolist()
    header = [name for name in MseReport.HEADER if name != "seconds"]
    table = Table("mse", header)
    bundle.tables.append(table)
    report = MseReport()
    R = cfg.replication.replicates
    for S in cfg.estimator.S_grid:
        results = parallel_map(_averaged_estimate_task, [(cfg_json, "replicate", S, r) for r in range(R)], workers)
        seconds = float(sum(t for _, t in results))
        rows = decompose_mse(np.array([v for v, _ in results]), reference, S=S, seconds=seconds)
        report.rows.extend(rows)
        table.rows.extend([getattr(row, h) for h in header] for row in rows)
        bundle.timings[f"S={S}"] = seconds

    k = reference.size
    names = SSM_NAMES if isinstance(cfg.model, SsmModelConfig) else ("xi",)
    slopes = {}
    for c in range(k):
        S_vals = report.S_values(c)
        if len(S_vals) >= 2:
            slopes[names[c]] = {
                "rel_mse": loglog_slope(S_vals, report.column("rel_mse", c)),
                "rel_variance": loglog_slope(S_vals, report.column("rel_variance", c)),
            }
        key = "rel" if report.column("relative", c).all() else "abs"
        bundle.plots.append(
            Plot(
                name=f"mse_{names[c]}",
                title=f"{names[c]}: MSE decomposition vs. S",
                xlabel="S",
                ylabel=f"{key}. value",
                series={
                    "MSE": (S_vals, report.column("rel_mse", c)),
                    "bias^2": (S_vals, report.column("rel_bias2", c)),
                    "variance": (S_vals, report.column("rel_variance", c)),
                },
                loglog=True,
            )
        )
    bundle.summary["slopes"] = slopes


def level_decay(cfg: ExperimentConfig, workers: int, bundle: Bundle) -> None:
    if cfg.max_level < 3:
        raise ValueError("level-decay needs max_level >= 3")
    cfg_json = cfg.model_dump_json()
    R = cfg.replication.replicates
    ladders = np.array(parallel_map(_ladder_task, [(cfg_json, r) for r in range(R)], workers))  # (R, L, k)
    sq = np.sum((ladders[:, 2:, :] - ladders[:, :-2, :]) ** 2, axis=2)  # (R, L - 2)
    ms = sq.mean(axis=0)
    rms = np.sqrt(ms)
    # delta method for the standard error of the root mean square
    se = sq.std(axis=0, ddof=1) / math.sqrt(R) / (2 * np.maximum(rms, 1e-300))
    ratios = [float(rms[i] / rms[i + 2]) if i + 2 < rms.size else math.nan for i in range(rms.size)]
    levels = np.arange(1, rms.size + 1)
    bundle.tables.append(
        Table(
            "gaps",
            ["level", "rms_gap", "rms_gap_se", "ratio_to_level_plus_2"],
            [[int(l), float(g), float(s), r] for l, g, s, r in zip(levels, rms, se, ratios)],
        )
    )
    finite = [r for r in ratios if math.isfinite(r)]
    bundle.summary["mean_ratio_per_2_levels"] = float(np.exp(np.mean(np.log(finite)))) if finite else math.nan
    bundle.summary["rate_reference"] = 2.0  # 2^{-l/2} decay of the L2 gap
    bundle.plots.append(
        Plot("gaps", "L2 gap between levels l and l+2", "level l", "rms gap",
             {"empirical": (levels, rms), "2^{-l/2} guide": (levels, rms[0] * 2.0 ** (-(levels - 1) / 2))}, logy=True)
    )


def msa_convergence(cfg: ExperimentConfig, workers: int, bundle: Bundle) -> None:
    from ..msa import MsaTrajectory, MsaStep, estimate_parameter_mse

    cfg_json = cfg.model_dump_json()
    C, n_iter = cfg.replication.runs, cfg.msa.iterations
    tasks = [(cfg_json, "msa-run", c, n_iter) for c in range(C)]
    if cfg.msa.reference is None:
        tasks.append((cfg_json, "msa-reference", 0, cfg.msa.reference_iterations))
    results = parallel_map(_msa_task, tasks, workers)
    if cfg.msa.reference is None:
        ref_xi, _ = results.pop()
        reference = ref_xi[ref_xi.shape[0] // 2 :].mean(axis=0)
        bundle.summary["reference_kind"] = f"long run of {cfg.msa.reference_iterations} iterations, final-half average"
    else:
        reference = np.array(cfg.msa.reference, dtype=float)
        bundle.summary["reference_kind"] = "configured"
    bundle.summary["reference"] = reference.tolist()

    runs = [MsaTrajectory([MsaStep(i, x, x, np.zeros(0)) for i, x in enumerate(xi)]) for xi, _ in results]
    mse = estimate_parameter_mse(runs, reference)  # (n + 1, k)
    names = SSM_NAMES
    bundle.tables.append(
        Table("rel_mse", ["iteration", *names], [[i, *map(float, row)] for i, row in enumerate(mse)])
    )
    final = np.stack([xi[-1] for xi, _ in results])
    bundle.tables.append(Table("final_iterates", ["run", *names], [[c, *map(float, row)] for c, row in enumerate(final)]))
    checkpoints = [c for c in cfg.msa.checkpoints if c <= n_iter]
    bundle.summary["checkpoints"] = {str(c): dict(zip(names, map(float, mse[c]))) for c in checkpoints}
    if len(checkpoints) >= 2:
        a, b = checkpoints[0], checkpoints[-1]
        bundle.summary["decay_factor"] = dict(zip(names, map(float, mse[a] / mse[b])))
    it = np.arange(1, n_iter + 1)
    bundle.plots.append(
        Plot("rel_mse", "relative MSE of the iterates", "iteration", "relative MSE",
             {name: (it, mse[1:, j]) for j, name in enumerate(names)}, loglog=True)
    )


def _quartile_means(trace: np.ndarray) -> list[float]:
    q = trace.size // 4
    return [float(trace[i * q : (i + 1) * q].mean()) for i in range(4)] if q else []


def objective_trace(cfg: ExperimentConfig, workers: int, bundle: Bundle) -> None:
    cfg_json = cfg.model_dump_json()
    C, n_iter = cfg.replication.runs, cfg.msa.iterations
    results = parallel_map(_msa_task, [(cfg_json, "msa-run", c, n_iter) for c in range(C)], workers)
    objectives = np.stack([obj for _, obj in results])  # (C, n)
    rows = [[c, i + 1, float(v)] for c in range(C) for i, v in enumerate(objectives[c])]
    bundle.tables.append(Table("objective", ["run", "iteration", "objective"], rows))
    mean = objectives.mean(axis=0)
    weights = np.array([np.exp(xi[-1] - xi[-1].max()) / np.exp(xi[-1] - xi[-1].max()).sum() for xi, _ in results])
    bundle.tables.append(
        Table("final_weights", ["run", *[f"w{i}" for i in range(weights.shape[1])]],
              [[c, *map(float, w)] for c, w in enumerate(weights)])
    )
    quartiles = _quartile_means(mean)
    q = mean.size // 4
    bundle.summary["quartile_means"] = quartiles
    if q >= 2:
        per_run = objectives[:, -q:].mean(axis=1) - objectives[:, :q].mean(axis=1)
        bundle.summary["final_minus_first_quartile"] = float(per_run.mean())
        se_first = float(mean[:q].std(ddof=1) / math.sqrt(q))
        se_last = float(mean[-q:].std(ddof=1) / math.sqrt(q))
        bundle.summary["quartile_se_naive"] = [se_first, se_last]
    it = np.arange(1, n_iter + 1)
    bundle.plots.append(Plot("objective", "objective estimate along the run", "iteration", "objective", {"mean over runs": (it, mean)}))


def backtest_synthetic(cfg: ExperimentConfig, workers: int, bundle: Bundle) -> None:
    from ..msv import backtest_metrics, portfolio_returns, softmax_weights, wealth_path

    cfg_json = cfg.model_dump_json()
    ctx = _context(cfg_json)
    inst = ctx["instance"]
    C, n_iter = cfg.replication.runs, cfg.msa.iterations
    results = parallel_map(_msa_task, [(cfg_json, "msa-run", c, n_iter) for c in range(C)], workers)
    # average the optimized weights across runs
    w_opt = np.mean([softmax_weights(xi[-1]) for xi, _ in results], axis=0)
    w_uni = np.full(inst.p, 1.0 / inst.p)
    header = ["strategy", "final_wealth", "pct_gain", "pct_loss", "max_drawdown", "pct_winning",
              "ann_return", "ann_volatility", "sharpe", "sharpe_defined"]
    rows, paths = [], {}
    for label, w in (("optimized", w_opt), ("uniform", w_uni)):
        r = portfolio_returns(inst.holdout_returns, w)
        m = backtest_metrics(r).to_dict()
        rows.append([label, *[m[h] for h in header[1:]]])
        paths[label] = wealth_path(r)
    bundle.tables.append(Table("metrics", header, rows))
    bundle.tables.append(Table("weights", ["asset", "optimized", "uniform"], [[i, float(a), float(b)] for i, (a, b) in enumerate(zip(w_opt, w_uni))]))
    t = np.arange(paths["uniform"].size)
    bundle.plots.append(Plot("wealth", "holdout wealth", "period", "wealth", {k: (t, v) for k, v in paths.items()}))


EXPERIMENT_FUNCS = {
    "rel-mse-vs-S": rel_mse_vs_s,
    "msa-convergence": msa_convergence,
    "objective-trace": objective_trace,
    "level-decay": level_decay,
    "backtest-synthetic": backtest_synthetic,
}
