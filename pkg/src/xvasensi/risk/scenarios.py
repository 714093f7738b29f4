"""Loss samples of the CVA desk over a risk horizon, built from lab simulations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cva import realized_loss_C
from ..lab import CvaLab
from ..learners.pipelines import RunonSample, risk_sigma, state_features
from ..products.instruments import cumulative_cashflows, pathwise_prices
from .hedging import HedgeData


@dataclass
class RunoffSample:
    delta_pi: np.ndarray
    loss_C: np.ndarray
    delta_Z: np.ndarray
    cash_flows: np.ndarray
    X_t: np.ndarray

    @property
    def data(self) -> HedgeData:
        return HedgeData(self.delta_pi + self.loss_C, self.delta_Z + self.cash_flows)


def runoff_sample(lab: CvaLab, t: float, m: int, seed: int, cva_t, pi0: float) -> RunoffSample:
    """Risk-mode paths up to t with the learned CVA_t, default losses and hedge P&L.

    ``cva_t`` is a risk-mode conditional CVA predictor and ``pi0`` the
    time-0 CVA it is compared with.
    """
    i = lab.grid.index_of(t)
    if i == 0:
        raise ValueError("the risk horizon must be positive")
    rows = lab.draw_eps(m, risk_sigma(t), seed)
    ps = lab.simulate(rows, m, seed, stop=i, mode="risk")
    loss_C = realized_loss_C(ps, t=t, mtm=lab.mtm(ps))
    delta_pi = cva_t.predict(state_features(ps, i, "risk")) - pi0
    dZ = pathwise_prices(ps, lab.iset, i) - lab.z0
    cf = cumulative_cashflows(ps, lab.iset, i)
    return RunoffSample(delta_pi, loss_C, dZ, cf, ps.X[:, -1].copy())


def runon_data(sample: RunonSample, predictor) -> HedgeData:
    """Run-on hedge data: learned CVA move against the instrument price moves."""
    return HedgeData(predictor.predict(sample.delta_rho), sample.delta_Z)
