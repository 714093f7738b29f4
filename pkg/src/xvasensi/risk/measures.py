"""Empirical value-at-risk and expected shortfall."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

LEVELS = (0.95, 0.975, 0.99)


def var_es(samples, alpha: float) -> tuple[float, float]:
    """VaR as the upper empirical alpha-quantile and ES as the mean beyond it."""
    x = np.asarray(samples, float).ravel()
    if x.size == 0:
        raise ValueError("no samples")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if x.size < 1 / (1 - alpha):
        warnings.warn(f"{x.size} samples are too few for level {alpha}", stacklevel=2)
    var = float(np.quantile(x, alpha, method="higher"))
    return var, float(x[x >= var].mean())


@dataclass(frozen=True)
class RiskReport:
    mean: float
    var: dict = field(default_factory=dict)
    es: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples, levels=LEVELS) -> "RiskReport":
        x = np.asarray(samples, float)
        pairs = {a: var_es(x, a) for a in levels}
        return cls(float(x.mean()), {a: v for a, (v, _) in pairs.items()},
                   {a: e for a, (_, e) in pairs.items()})

    def rows(self):
        for a in sorted(self.var):
            yield a, self.var[a], self.es[a]


def quadratic_proxy_risk(sensis, scenarios, gammas=None, levels=LEVELS) -> RiskReport:
    """Risk of the Taylor proxy sensis . d + 1/2 sum gamma_k d_k^2 over scenario rows d."""
    d = np.atleast_2d(np.asarray(scenarios, float))
    s = np.asarray(sensis, float)
    if d.shape[1] != s.size:
        raise ValueError(f"scenarios have {d.shape[1]} columns for {s.size} sensitivities")
    proxy = d @ s
    if gammas is not None:
        proxy = proxy + 0.5 * (d**2) @ np.asarray(gammas, float)
    return RiskReport.from_samples(proxy, levels)
