"""CVA cash flows, realized default losses, baseline and nested CVA.

Exposures are already in numeraire units, so no discounting is applied.
Client LGD is 1 in the CVA cash flows. Survival over a pricing step of
length h is exp(-h * gamma) with gamma taken at the left end of the step.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .engine.params import ModelParams
from .engine.rng import derive_seed
from .engine.simulate import PathSet, SimGrid, simulate_paths
from .products.swaps import Portfolio, portfolio_mtm


@dataclass(frozen=True)
class CashFlowSample:
    xi: np.ndarray
    loss_C: np.ndarray
    t: float

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path_id", "xi", "loss_C"])
            for j, (x, c) in enumerate(zip(self.xi, self.loss_C)):
                w.writerow([j, f"{x:.6g}", f"{c:.6g}"])


def _mtm(ps: PathSet, portfolio: Portfolio | None, mtm: np.ndarray | None) -> np.ndarray:
    if mtm is None:
        if portfolio is None:
            raise ValueError("need a portfolio or precomputed MtM")
        mtm = portfolio_mtm(ps, portfolio)
    return mtm


def xi_from_arrays(exposure: np.ndarray, gamma: np.ndarray, alive: np.ndarray, h: float) -> np.ndarray:
    """Intensity-based CVA cash flow from the first date to the horizon.

    ``exposure`` and ``gamma`` have shape (paths, dates, C) and cover the
    window [t, T]; ``alive`` is 1{tau_c > t}, shape (paths, C).
    """
    pos = np.maximum(exposure[:, :-1], 0.0)
    cum = h * np.cumsum(gamma[:, :-1], axis=1)
    after = np.exp(-cum)
    before = np.concatenate([np.ones_like(after[:, :1]), after[:, :-1]], axis=1)
    return np.einsum("mjc,mc->m", pos * (before - after), alive)


def cashflows_xi(ps: PathSet, portfolio: Portfolio | None = None, t: float = 0.0, *,
                 mtm: np.ndarray | None = None) -> np.ndarray:
    """Per-path xi_{t,T} for t on the simulated window."""
    if ps.end != ps.grid.n:
        raise ValueError("xi needs paths simulated up to the horizon")
    k = ps.local(ps.grid.index_of(t))
    mtm = _mtm(ps, portfolio, mtm)
    alive = 1.0 - ps.X[:, k, :]
    return xi_from_arrays(mtm[:, k:], ps.gamma[:, k:], alive, ps.grid.h)


def realized_loss_C(ps: PathSet, portfolio: Portfolio | None = None, t: float | None = None, *,
                    mtm: np.ndarray | None = None) -> np.ndarray:
    """Per-path C_t: positive exposure at the start of each step holding a default.

    Defaults before the simulated window (restarted paths) are not counted.
    """
    i = ps.end if t is None else ps.grid.index_of(t)
    k = ps.local(i)
    mtm = _mtm(ps, portfolio, mtm)
    jumps = np.diff(ps.X[:, : k + 1, :].astype(float), axis=1)
    return np.einsum("mjc,mjc->m", np.maximum(mtm[:, :k], 0.0), jumps)


def cashflow_sample(ps: PathSet, portfolio: Portfolio, t: float = 0.0, *, mtm=None) -> CashFlowSample:
    """Intensity-based xi_{t,T} and default-based losses over (t, T] per path."""
    mtm = _mtm(ps, portfolio, mtm)
    loss = realized_loss_C(ps, mtm=mtm) - realized_loss_C(ps, t=t, mtm=mtm)
    return CashFlowSample(cashflows_xi(ps, t=t, mtm=mtm), loss, t)


def mean_ci(x: np.ndarray) -> tuple[float, float]:
    """Sample mean and 95% CI half-width."""
    x = np.asarray(x, float)
    if x.size < 2:
        raise ValueError("need at least two samples")
    return float(x.mean()), float(1.96 * x.std(ddof=1) / np.sqrt(x.size))


def baseline_cva(params: ModelParams, grid: SimGrid, portfolio: Portfolio, m: int, seed: int,
                 **sim_kw) -> tuple[float, float]:
    """Monte Carlo CVA_0 as the sample mean of xi_{0,T}, with its 95% CI."""
    if m < 2:
        raise ValueError("m must be >= 2")
    ps = simulate_paths(params, grid, m, seed, **sim_kw)
    return mean_ci(cashflows_xi(ps, portfolio, 0.0))


def nested_cva(outer: PathSet, portfolio: Portfolio, t: float, inner_m: int, seed: int,
               *, chunk_paths: int = 1 << 14, threads: int = 1, **sim_kw) -> np.ndarray:
    """Conditional CVA_t for every outer path by inner resimulation.

    Each outer state (X_t, Y_t, eps) is restarted ``inner_m`` times and
    xi_{t,T} is averaged. States are processed in chunks, each chunk run
    as one batched simulation whose seed is derived from the chunk index.
    """
    i = outer.grid.index_of(t)
    if i >= outer.grid.n:
        return np.zeros(outer.m)
    X, Y = outer.state(i)
    per_chunk = max(1, chunk_paths // inner_m)
    out = np.empty(outer.m)
    for n_chunk, lo in enumerate(range(0, outer.m, per_chunk)):
        hi = min(outer.m, lo + per_chunk)
        rows = np.repeat(np.arange(lo, hi), inner_m)
        params = outer.params
        if params.batched:
            params = ModelParams.from_vector(params.to_vector()[rows], params.E, params.C)
        ps = simulate_paths(params, outer.grid, rows.size, derive_seed(seed, n_chunk), start=i,
                            y0=Y[rows], x0=X[rows], threads=threads,
                            mode="sensis" if params.batched else "baseline", **sim_kw)
        xi = cashflows_xi(ps, portfolio, t)
        out[lo:hi] = xi.reshape(hi - lo, inner_m).mean(axis=1)
    return out
