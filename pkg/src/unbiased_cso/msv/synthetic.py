"""Synthetic MSV instances and their text-file representation.

File layout: ``#``-prefixed ``key=value`` header lines (JSON values), then a
comma-separated return matrix with one row per period. Floats are written
with ``repr`` so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import LatentPath, MsvParams, MsvState, simulate_latents, simulate_returns
from .mwg import MwgConfig, mwg_sweep
from .structure import n_pairs


@dataclass(frozen=True)
class SyntheticInstance:
    params: MsvParams
    returns: np.ndarray  # (history + holdout, p)
    history: int
    horizon: int
    seed: int
    latents: LatentPath | None = None

    @property
    def p(self) -> int:
        return self.params.p

    @property
    def K(self) -> int:
        return self.params.K

    @property
    def train_returns(self) -> np.ndarray:
        return self.returns[: self.history]

    @property
    def holdout_returns(self) -> np.ndarray:
        return self.returns[self.history :]

    @property
    def log_returns(self) -> np.ndarray:
        """``log(1 + R)`` over the history window, the data seen by the sampler."""
        return np.log1p(self.train_returns)


def desk_params(p: int, K: int, rng: np.random.Generator) -> MsvParams:
    """Positively loaded (market-like) factors with heterogeneous exposures.

    Log-return standard deviations come out around 0.05-0.15, and the spread
    in loadings leaves room for a tilted portfolio to beat uniform weights.
    """
    J = n_pairs(K)
    return MsvParams(
        B=np.abs(rng.normal(0.3, 0.2, (p, K))),
        V=np.exp(rng.uniform(np.log(1e-3), np.log(1e-2), p)),
        phi_x=np.full(K, 0.95),
        x0=rng.normal(-5.0, 0.5, K),
        sig_x=np.full(K, 0.1),
        phi_psi=np.full(J, 0.9),
        psi0=rng.normal(0.0, 0.5, J),
        sig_psi=np.full(J, 0.1),
    )


def make_instance(p: int, K: int, history: int, horizon: int, seed: int, holdout: int = 0) -> SyntheticInstance:
    if min(p, K, history, horizon) < 1 or holdout < 0:
        raise ValueError("p, K, history and horizon must be positive and holdout non-negative")
    rng = np.random.default_rng(seed)
    params = desk_params(p, K, rng)
    latents = simulate_latents(params, history + holdout, rng)
    R = simulate_returns(params.B, params.V, latents.F, rng)
    return SyntheticInstance(params, R, history, horizon, seed, latents)


def initial_state(inst: SyntheticInstance, rng: np.random.Generator, burn: int = 0, mwg: MwgConfig | None = None) -> MsvState:
    """Generating parameters with latents redrawn from the model, then ``burn`` sweeps."""
    state = MsvState(inst.params, simulate_latents(inst.params, inst.history, rng))
    cfg = mwg or MwgConfig()
    for _ in range(burn):
        state = mwg_sweep(state, inst.log_returns, cfg, rng)
    return state


def write_instance(path, inst: SyntheticInstance) -> None:
    header = {
        "p": inst.p,
        "K": inst.K,
        "history": inst.history,
        "horizon": inst.horizon,
        "seed": inst.seed,
        "theta": inst.params.theta_dict(),
        "chi": inst.params.chi_dict(),
    }
    lines = [f"# {key}={json.dumps(value)}" for key, value in header.items()]
    lines += [",".join(repr(float(v)) for v in row) for row in inst.returns]
    Path(path).write_text("\n".join(lines) + "\n")


def read_instance(path) -> SyntheticInstance:
    header: dict = {}
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key] = json.loads(value)
            continue
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed return row") from exc
    missing = {"p", "K", "history", "horizon", "seed", "theta", "chi"} - header.keys()
    if missing:
        raise ValueError(f"{path}: missing header keys {sorted(missing)}")
    params = MsvParams.from_dicts(header["theta"], header["chi"])
    returns = np.array(rows, dtype=float).reshape(-1, header["p"])
    if params.p != header["p"] or params.K != header["K"]:
        raise ValueError(f"{path}: header dimensions disagree with the stored parameters")
    return SyntheticInstance(params, returns, int(header["history"]), int(header["horizon"]), int(header["seed"]))
