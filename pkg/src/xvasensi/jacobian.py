"""Calibration and the implicit-function conversion to market sensitivities.

The calibration error is the mean squared price error over the q
instruments, minimized over the free parameters psi (volatilities stay
frozen). At a minimum its gradient vanishes, so differentiating that
first-order condition gives d psi / d z = -H_psipsi^{-1} H_psiz.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

FD_REL = 1e-6
FD_ABS = 1e-8
HESS_REL = 1e-4
COND_MAX = 1e12


class CalibrationError(RuntimeError):
    pass


@dataclass
class CalibrationSpec:
    """Instrument pricer over the full parameter vector plus a free mask.

    ``price_fn(rho) -> (q,)`` prices every instrument; ``rho_ref`` holds the
    frozen components. ``price_jacobian(rho) -> (q, n_free)`` is optional;
    when absent the price Jacobian is taken by central differences.
    """

    price_fn: Callable
    rho_ref: np.ndarray
    free_mask: np.ndarray
    price_jacobian: Callable | None = None
    names: list | None = None

    def __post_init__(self):
        self.rho_ref = np.asarray(self.rho_ref, float)
        self.free_mask = np.asarray(self.free_mask, bool)
        if self.free_mask.shape != self.rho_ref.shape:
            raise ValueError("free mask and parameter vector differ in size")

    @property
    def n_free(self) -> int:
        return int(self.free_mask.sum())

    def full(self, psi) -> np.ndarray:
        rho = self.rho_ref.copy()
        rho[self.free_mask] = psi
        return rho

    def psi(self, rho=None) -> np.ndarray:
        return (self.rho_ref if rho is None else np.asarray(rho, float))[self.free_mask]

    def prices(self, psi) -> np.ndarray:
        return np.asarray(self.price_fn(self.full(psi)), float)

    def steps(self, psi, rel=FD_REL) -> np.ndarray:
        return np.maximum(rel * np.abs(psi), FD_ABS)

    def jacobian(self, psi) -> np.ndarray:
        """d prices / d psi, shape (q, n_free)."""
        psi = np.asarray(psi, float)
        if self.price_jacobian is not None:
            return np.asarray(self.price_jacobian(self.full(psi)), float)
        h = self.steps(psi)
        cols = []
        for k in range(psi.size):
            e = np.zeros_like(psi)
            e[k] = h[k]
            cols.append((self.prices(psi + e) - self.prices(psi - e)) / (2 * h[k]))
        return np.stack(cols, axis=1)


def cal_err(spec: CalibrationSpec, z, psi) -> float:
    z = np.asarray(z, float)
    r = spec.prices(psi) - z
    if r.shape != z.shape:
        raise ValueError("price vector and quotes differ in size")
    return float(r @ r) / z.size


def cal_grad(spec: CalibrationSpec, z, psi) -> np.ndarray:
    z = np.asarray(z, float)
    return 2.0 / z.size * spec.jacobian(psi).T @ (spec.prices(psi) - z)


def calibrate(spec: CalibrationSpec, z, psi_init=None, *, tol: float = 1e-10,
              max_iter: int = 100) -> np.ndarray:
    """Levenberg-Marquardt on the price residuals until the gradient norm < tol."""
    z = np.asarray(z, float)
    if z.size < spec.n_free:
        raise CalibrationError(f"underdetermined: {z.size} instruments for {spec.n_free} free parameters")
    psi = spec.psi() if psi_init is None else np.asarray(psi_init, float).copy()
    lam = 1e-3
    err = cal_err(spec, z, psi)
    gnorm = np.inf
    for _ in range(max_iter):
        G = spec.jacobian(psi)
        r = spec.prices(psi) - z
        grad = 2.0 / z.size * G.T @ r
        gnorm = float(np.linalg.norm(grad))
        if gnorm < tol:
            return psi
        D = np.maximum(np.abs(psi), FD_ABS)
        Gs = G * D
        A = Gs.T @ Gs
        while True:
            step = np.linalg.solve(A + lam * np.diag(np.diag(A) + 1e-300), -Gs.T @ r) * D
            cand = psi + step
            new = cal_err(spec, z, cand)
            if np.isfinite(new) and new <= err:
                psi, err = cand, new
                lam = max(lam / 10, 1e-12)
                break
            lam *= 10
            if lam > 1e12:
                break
        if lam > 1e12 or np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(psi)):
            gnorm = float(np.linalg.norm(cal_grad(spec, z, psi)))
            if gnorm < tol:
                return psi
            break
    gnorm = float(np.linalg.norm(cal_grad(spec, z, psi)))
    if gnorm < tol:
        return psi
    raise CalibrationError(f"calibration did not converge: gradient norm {gnorm:.3e}")


def _solve_checked(H, rhs, names=None):
    """Solve H x = rhs after a condition-number check on the scaled system."""
    d = np.sqrt(np.abs(np.diag(H)))
    d = np.where(d > 0, d, 1.0)
    Hs = H / np.outer(d, d)
    s = np.linalg.svd(Hs, compute_uv=False)
    cond = s[0] / s[-1] if s[-1] > 0 else np.inf
    if cond > COND_MAX:
        rank = int((s > s[0] / COND_MAX).sum())
        label = f" over {len(names)} parameters" if names is not None else ""
        raise CalibrationError(f"singular calibration Hessian: rank {rank} of {H.shape[0]}{label} "
                               f"(condition number {cond:.2e})")
    return np.linalg.solve(Hs, rhs / d[:, None]) / d[:, None]


def param_jacobian(spec: CalibrationSpec, z, psi_star, *, method: str = "gauss-newton") -> np.ndarray:
    """d psi / d z at a calibrated point, shape (n_free, q).

    ``gauss-newton`` uses H_psipsi = (2/q) G^T G; ``hessian`` takes the full
    second derivative of cal_err by central differences. In both cases
    H_psiz = -(2/q) G^T because cal_err is quadratic in z.
    """
    z = np.asarray(z, float)
    psi_star = np.asarray(psi_star, float)
    q = z.size
    G = spec.jacobian(psi_star)
    Hz = -2.0 / q * G.T
    if method == "gauss-newton":
        H = 2.0 / q * G.T @ G
    elif method == "hessian":
        H = _fd_hessian(lambda x: cal_err(spec, z, x), psi_star, spec.steps(psi_star, HESS_REL))
    else:
        raise ValueError("method must be 'gauss-newton' or 'hessian'")
    names = None if spec.names is None else [n for n, f in zip(spec.names, spec.free_mask) if f]
    return -_solve_checked(H, Hz, names)


def _fd_hessian(f, x, h):
    n = x.size
    H = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i):
            ej = np.zeros(n)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej)
                                 + f(x - ei - ej)) / (4 * h[i] * h[j])
    return H


def market_sensitivities(model_sensis, jac) -> np.ndarray:
    """Chain rule (dPi/dz)^T = (dPi/dpsi)^T dpsi/dz over the free parameters."""
    s = np.asarray(model_sensis, float)
    jac = np.asarray(jac, float)
    if s.ndim != 1 or jac.shape[0] != s.size:
        raise ValueError(f"{s.size} model sensitivities for a Jacobian with {jac.shape[0]} rows")
    return s @ jac


def jacobian_to_csv(jac, param_names, instrument_names, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter"] + list(instrument_names))
        for name, row in zip(param_names, jac):
            w.writerow([name] + [f"{v:.6g}" for v in row])


def market_sensis_to_csv(values, keys, path, method: str = ""):
    """One row per instrument grouped by curve: curve, index, pillar, sensitivity."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "index", "pillar", "sensitivity", "method"])
        for (curve, idx, pillar), v in zip(keys, values):
            w.writerow([curve, idx, f"{pillar:g}", f"{v:.6g}", method])
