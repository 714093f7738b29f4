"""Conditional CVA learners on lab simulations.

``learn_conditional_cva`` regresses xi_{t,T} on the time-t state
(X_t, Y_t), plus the randomized exogenous parameters eps in risk mode.
``learn_delta_cva_runon`` regresses xi_{0,T}(varrho_(t)) - xi_{0,T}(rho0),
both legs on common drivers, on the shocked parameters varrho_(t) - rho0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cva import cashflows_xi
from ..engine.params import ModelParams
from ..engine.rng import derive_seed
from ..engine.simulate import PathSet, SimGrid, simulate_paths
from ..lab import CvaLab
from ..products.instruments import instrument_prices
from .linear import fit_linear
from .mlp import TrainConfig, fit_mlp

RISK_SIGMA = 0.01  # relative stdev of eps per sqrt(year) of risk horizon


def risk_sigma(t: float) -> float:
    return RISK_SIGMA * np.sqrt(t)


def state_features(ps: PathSet, i: int, mode: str) -> np.ndarray:
    X, Y = ps.state(i)
    feats = [X.astype(float), Y]
    if mode == "risk":
        lay = ps.params.layout
        vec = np.broadcast_to(ps.params.to_vector(), (ps.m, lay.p))
        feats.append(vec[:, ~lay.y_mask])
    return np.concatenate(feats, axis=1)


@dataclass
class ConditionalCva:
    """Predictor of CVA_t from state features built by ``state_features``."""

    model: object
    mode: str
    t: float

    def predict(self, features) -> np.ndarray:
        return self.model.predict(features)

    __call__ = predict


def mode_rows(lab: CvaLab, mode: str, t: float, m: int, seed: int) -> np.ndarray:
    if mode == "baseline":
        return np.tile(lab.rho0, (m, 1))
    if mode == "risk":
        return lab.draw_eps(m, risk_sigma(t), seed)
    raise ValueError("mode must be 'baseline' or 'risk'")


def conditional_training_data(lab: CvaLab, t: float, mode: str, m: int, seed: int):
    """Features at t and labels xi_{t,T} from m full paths."""
    i = lab.grid.index_of(t)
    if i == 0:
        raise ValueError("t = 0 is the baseline CVA; use baseline_cva")
    rows = mode_rows(lab, mode, t, m, seed)
    ps = lab.simulate(rows, m, seed, mode="sensis" if mode == "risk" else "baseline")
    xi = cashflows_xi(ps, t=t, mtm=lab.mtm(ps))
    return state_features(ps, i, mode), xi


def learn_conditional_cva(lab: CvaLab, t: float, mode: str, m: int, seed: int, *,
                          hidden=(128, 128), train: TrainConfig = TrainConfig(),
                          kind: str = "mlp"):
    """Train a CVA_t predictor; returns (predictor, features, labels)."""
    feats, xi = conditional_training_data(lab, t, mode, m, seed)
    if kind == "mlp":
        model = fit_mlp(feats, xi, hidden, train)
    elif kind == "linear":
        model = fit_linear(feats, xi, intercept=True)
    else:
        raise ValueError("kind must be 'mlp' or 'linear'")
    return ConditionalCva(model, mode, t), feats, xi


def twin_sample(lab: CvaLab, t: float, mode: str, m: int, seed: int):
    """States at t with two conditionally independent continuations.

    Returns (features, xi1, xi2, outer PathSet). The continuations restart
    from (X_t, Y_t, eps) with seeds derived from ``seed``.
    """
    i = lab.grid.index_of(t)
    rows = mode_rows(lab, mode, t, m, seed)
    params = lab.as_params(rows)
    mode_sim = "sensis" if params.batched else "baseline"
    outer = lab.simulate(params, m, seed, stop=i, mode=mode_sim)
    X, Y = outer.state(i)
    xis = []
    for copy in (1, 2):
        ps = lab.simulate(params, m, derive_seed(seed, copy), start=i, y0=Y, x0=X, mode=mode_sim)
        xis.append(cashflows_xi(ps, t=t, mtm=lab.mtm(ps)))
    return state_features(outer, i, mode), xis[0], xis[1], outer


@dataclass
class RunonSample:
    """Shocked parameters with common-driver CVA cash flows and price moves."""

    rho: np.ndarray
    xi_shocked: np.ndarray
    xi_base: np.ndarray
    delta_Z: np.ndarray
    rho0: np.ndarray

    @property
    def labels(self) -> np.ndarray:
        return self.xi_shocked - self.xi_base

    @property
    def delta_rho(self) -> np.ndarray:
        return self.rho - self.rho0


def runon_scenarios(lab: CvaLab, t: float, m: int, seed: int) -> np.ndarray:
    """varrho_(t) = (Y_t(y0, eps_(t)), eps_(t)) with eps_(t) ~ N(eps0, (1% sqrt(t) eps0)^2).

    Y_t is simulated on its own drivers (seed derived from ``seed``),
    independent of the payoff drivers. Negative CIR states are floored at 0.
    """
    i = lab.grid.index_of(t)
    if i == 0:
        raise ValueError("the run-on horizon must be positive")
    rows = lab.draw_eps(m, risk_sigma(t), seed, tag=1)
    ps = lab.simulate(rows, m, derive_seed(seed, 101), stop=i, mode="risk")
    _, Y = ps.state(i)
    lay = lab.layout
    y = Y.copy()
    y[:, lay.slices["gamma0"]] = np.maximum(y[:, lay.slices["gamma0"]], 0.0)
    rows[:, : lay.n_y] = y
    return rows


def runon_sample(lab: CvaLab, t: float, m: int, seed: int) -> RunonSample:
    rho = runon_scenarios(lab, t, m, seed)
    payoff_seed = derive_seed(seed, 102)
    xi_s = lab.xi0(rho, m, payoff_seed)
    xi_b = lab.xi0(lab.rho0, m, payoff_seed)
    dZ = instrument_prices(ModelParams.from_vector(rho, lab.E, lab.C), lab.iset) - lab.z0
    return RunonSample(rho, xi_s, xi_b, dZ, lab.rho0.copy())


@dataclass
class DeltaCva:
    """Predictor of dPi_(t) as a function of varrho - rho0."""

    model: object

    def predict(self, delta_rho) -> np.ndarray:
        return self.model.predict(delta_rho)

    __call__ = predict


def learn_delta_cva_runon(lab: CvaLab, t: float, m: int, seed: int, *, hidden=(200,),
                          train: TrainConfig = TrainConfig(), sample: RunonSample | None = None):
    """Train the run-on CVA-move learner; returns (predictor, sample)."""
    sample = runon_sample(lab, t, m, seed) if sample is None else sample
    return DeltaCva(fit_mlp(sample.delta_rho, sample.labels, hidden, train)), sample
