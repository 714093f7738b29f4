"""Twin Monte Carlo validation of conditional-expectation predictors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TwinReport:
    """Twin statistics; ``err`` is None (N/A) when the statistic is not positive."""

    stat: float
    stdev: float
    err: float | None
    ub: float
    norm: float
    m: int

    @property
    def stat_se(self) -> float:
        return self.stdev / np.sqrt(self.m)

    def as_row(self) -> dict:
        return {"twin_stat": self.stat, "twin_stdev": self.stdev,
                "twin_err": "N/A" if self.err is None else self.err,
                "twin_ub": self.ub, "norm": self.norm}


def twin_validate(phi, xi1, xi2, norm: float = 1.0, features=None) -> TwinReport:
    """Unbiased mean squared error of a predictor from two conditionally independent payoffs.

    ``phi`` is either the predictions Phi(rho_j) or a callable applied to
    ``features``. The per-sample term Phi^2 - (xi1 + xi2) Phi + xi1 xi2 has
    mean E[(Phi - E[xi | rho])^2].
    """
    if norm <= 0:
        raise ValueError("norm must be positive")
    if callable(phi) or hasattr(phi, "predict"):
        phi = (phi.predict if hasattr(phi, "predict") else phi)(features)
    phi, xi1, xi2 = (np.asarray(v, float) for v in (phi, xi1, xi2))
    phi = np.broadcast_to(phi, xi1.shape)
    if xi1.shape != xi2.shape:
        raise ValueError("twin samples differ in size")
    m = xi1.size
    term = phi**2 - (xi1 + xi2) * phi + xi1 * xi2
    stat = float(term.mean())
    stdev = float(np.sqrt(np.mean((term - stat) ** 2)))
    up = stat + 2.0 / np.sqrt(m) * stdev
    ub = float(np.sqrt(up)) / norm if up >= 0 else float("nan")
    err = float(np.sqrt(stat)) / norm if stat > 0 else None
    return TwinReport(stat, stdev, err, ub, float(norm), m)
