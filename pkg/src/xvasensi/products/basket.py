"""Call on the geometric average of d independent Black-Scholes assets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ..engine.rng import DIFFUSION, make_stream, stream_id


@dataclass(frozen=True)
class BasketSpec:
    spots: tuple[float, ...]
    vols: tuple[float, ...]
    rate: float = 0.0
    strike: float = 100.0
    maturity: float = 1.0

    def __post_init__(self):
        if len(self.spots) != len(self.vols) or not self.spots:
            raise ValueError("spots and vols must be non-empty and of equal length")
        if min(self.spots) <= 0 or min(self.vols) <= 0 or self.strike <= 0 or self.maturity <= 0:
            raise ValueError("spots, vols, strike and maturity must be positive")

    @property
    def d(self) -> int:
        return len(self.spots)

    @property
    def rho0(self) -> np.ndarray:
        """Parameter vector (spots, vols) used by the bump estimators."""
        return np.concatenate([self.spots, self.vols])

    @classmethod
    def default(cls, d: int, spot=100.0, strike=100.0) -> "BasketSpec":
        vols = tuple(float(v) for v in np.linspace(0.15, 0.35, d)) if d > 1 else (0.2,)
        return cls(spots=(spot,) * d, vols=vols, strike=strike)


@dataclass(frozen=True)
class BasketGreeks:
    price: float
    deltas: np.ndarray
    vegas: np.ndarray
    gammas: np.ndarray


def basket_call_analytic(spec: BasketSpec) -> BasketGreeks:
    """Price, deltas, vegas and diagonal (spot) gammas in closed form.

    The geometric average G is lognormal with variance parameter
    sum(sigma_i^2)/d^2, so the Black formula applies on its forward F.
    """
    S, sig = np.asarray(spec.spots, float), np.asarray(spec.vols, float)
    d, T, r, K = spec.d, spec.maturity, spec.rate, spec.strike
    disc = np.exp(-r * T)
    sg = np.sqrt((sig**2).sum()) / d
    v = sg * np.sqrt(T)
    lnF = np.log(S).mean() + (r - (sig**2).mean() / 2) * T + v**2 / 2
    F = np.exp(lnF)
    d1 = (lnF - np.log(K)) / v + v / 2
    d2 = d1 - v
    price = disc * (F * norm.cdf(d1) - K * norm.cdf(d2))
    deltas = disc * norm.cdf(d1) * F / (d * S)
    gammas = disc * F / (d**2 * S**2) * (norm.pdf(d1) / v + norm.cdf(d1) * (1 - d))
    dlnF = T * sig * (1 / d**2 - 1 / d)
    vegas = disc * F * (norm.cdf(d1) * dlnF + norm.pdf(d1) * np.sqrt(T) * sig / (d**2 * sg))
    return BasketGreeks(float(price), deltas, vegas, gammas)


def basket_drivers(d: int, m: int, seed: int) -> np.ndarray:
    return make_stream(seed, stream_id(DIFFUSION, 0)).normals((m, d))


def basket_payoff(spec: BasketSpec, rho: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Discounted call payoff per path for parameter rows ``rho = (spots, vols)``."""
    d, T, r = spec.d, spec.maturity, spec.rate
    rho = np.broadcast_to(rho, (Z.shape[0], 2 * d))
    S, sig = rho[:, :d], rho[:, d:]
    logG = (np.log(S) + (r - sig**2 / 2) * T + sig * np.sqrt(T) * Z).mean(axis=1)
    return np.exp(-r * T) * np.maximum(np.exp(logG) - spec.strike, 0.0)


def basket_payoff_fn(spec: BasketSpec):
    """Payoff with common random numbers: ``f(rho, seed)`` uses driver row j for path j."""
    def f(rho, seed):
        rho = np.atleast_2d(rho)
        return basket_payoff(spec, rho, basket_drivers(spec.d, rho.shape[0], seed))
    return f
