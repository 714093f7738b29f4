"""Affine closed forms: Vasicek bonds and CIR survival probabilities.

All functions broadcast over their arguments. Small mean-reversion
speeds use series expansions so the formulas stay accurate at a -> 0.
"""

from __future__ import annotations

import numpy as np

_SERIES = 1e-4


def vasicek_AB(a, b, sigma, ttm):
    """(A, B) with P = exp(A - B r) for dr = a(b - r)dt + sigma dW."""
    a, b, sigma, ttm = np.broadcast_arrays(*(np.asarray(x, float) for x in (a, b, sigma, ttm)))
    x = a * ttm
    small = np.abs(x) < _SERIES
    a_safe = np.where(small, 1.0, a)
    B = np.where(small, ttm * (1 - x / 2 + x**2 / 6 - x**3 / 24), -np.expm1(-a_safe * ttm) / a_safe)
    # split A = b (B - tau) + sigma^2 g(a, tau) so the 1/a terms cancel analytically
    g_direct = (ttm - B) / (2 * a_safe**2) - B**2 / (4 * a_safe)
    g_series = ttm**3 / 6 - a * ttm**4 / 8
    g = np.where(small, g_series, g_direct)
    A = b * (B - ttm) + sigma**2 * g
    return A, B


def zc_bond_price(a, b, sigma_r, r, ttm):
    """Vasicek zero-coupon price P(t, t + ttm) given the short rate r."""
    if np.any(np.asarray(ttm) < 0):
        raise ValueError("time to maturity must be non-negative")
    A, B = vasicek_AB(a, b, sigma_r, ttm)
    return np.exp(A - B * r)


def cir_AB(alpha, delta, nu, ttm):
    """(A, B) with survival S = exp(A - B gamma) for dg = delta(alpha - g)dt + nu sqrt(g) dW.

    Returns log A rather than A. The nu -> 0 limit is the deterministic
    intensity ODE; it is reached smoothly through log1p.
    """
    alpha, delta, nu, ttm = np.broadcast_arrays(*(np.asarray(x, float) for x in (alpha, delta, nu, ttm)))
    if np.any(delta <= 0):
        raise ValueError("CIR mean reversion delta must be positive")
    h = np.sqrt(delta**2 + 2 * nu**2)
    em = -np.expm1(-h * ttm)  # 1 - e^{-h tau}
    denom = (delta + h) * em + 2 * h * np.exp(-h * ttm)
    B = 2 * em / denom
    u = em / (h * (h + delta))
    v = u * nu**2
    nu2 = np.where(nu == 0, 1.0, nu**2)
    f = np.where(v < 1e-8, -u - u * v / 2, np.log1p(-np.minimum(v, 1 - 1e-300)) / nu2)
    logA = -2 * delta * alpha * (ttm / (h + delta) + f)
    return logA, B


def cir_survival(alpha, delta, nu, gamma, ttm):
    """Survival probability E[exp(-int_0^ttm gamma)] under CIR dynamics."""
    logA, B = cir_AB(alpha, delta, nu, ttm)
    return np.exp(logA - B * np.asarray(gamma, float))
