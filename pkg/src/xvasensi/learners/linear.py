"""Truncated-SVD ridge regression with slope standard errors."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

TRUNCATION = 1e-10
RIDGE = 1e-8


@dataclass
class LinearModel:
    """Affine predictor ``y = x @ coef + intercept``.

    ``cov`` is the estimated covariance of ``coef`` (None if not
    computed); ``zero_columns`` flags features that were identically 0.
    """

    coef: np.ndarray
    intercept: float = 0.0
    cov: np.ndarray | None = None
    zero_columns: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))
    rank: int = 0

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, float) @ self.coef + self.intercept

    __call__ = predict

    def input_gradient(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.broadcast_to(self.coef, x.shape).copy()

    @property
    def stderr(self) -> np.ndarray:
        if self.cov is None:
            raise ValueError("model was fitted without standard errors")
        return np.sqrt(np.maximum(np.diag(self.cov), 0.0))


def svd_solve(X: np.ndarray, y: np.ndarray, ridge: float = RIDGE, truncation: float = TRUNCATION):
    """Ridge solution via thin SVD; returns (beta, s, Vt, kept mask).

    ``ridge`` is relative to the mean squared singular value, so it is
    invariant to a global rescaling of X.
    """
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    keep = s > truncation * (s[0] if s.size else 0.0)
    lam = ridge * float(np.mean(s**2)) if s.size else 0.0
    filt = np.where(keep, s / (s**2 + lam), 0.0)
    beta = Vt.T @ (filt * (U.T @ y))
    return beta, s, Vt, keep


def fit_linear(X, y, *, ridge: float = RIDGE, intercept: bool = False, stderr: str | bool = False,
               standardize: bool = True, truncation: float = TRUNCATION) -> LinearModel:
    """Least squares ``min |X b - y|^2 + lam |b|^2`` by truncated SVD.

    Columns are rescaled to unit RMS before solving (and coefficients
    mapped back), so the relative ridge and the truncation threshold act
    evenly across features of very different magnitudes.

    ``stderr`` selects the coefficient covariance: ``"classic"`` (or True)
    assumes homoscedastic noise, ``"robust"`` is the HC1 sandwich, which
    stays valid when the noise grows with the regressors.
    """
    X = np.asarray(X, float)
    y = np.asarray(y, float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (m, k) and y (m,)")
    m, k = X.shape
    if m <= k:
        warnings.warn(f"only {m} samples for {k} features", stacklevel=2)
    xm = X.mean(axis=0) if intercept else np.zeros(k)
    ym = y.mean() if intercept else 0.0
    Xc = X - xm
    yc = y - ym
    scale = np.sqrt(np.mean(Xc**2, axis=0)) if standardize else np.ones(k)
    zero = scale == 0
    scale = np.where(zero, 1.0, scale)
    Z = Xc / scale
    beta_z, s, Vt, keep = svd_solve(Z, yc, ridge, truncation)
    beta = np.where(zero, 0.0, beta_z / scale)
    cov = None
    if stderr:
        resid = yc - Z @ beta_z
        dof = max(m - int(keep.sum()) - int(intercept), 1)
        sigma2 = float(resid @ resid) / dof
        inv = np.where(keep, 1.0 / np.where(keep, s, 1.0) ** 2, 0.0)
        bread = (Vt.T * inv) @ Vt
        if stderr == "robust":
            meat = (Z * resid[:, None] ** 2).T @ Z * (m / dof)
            cov_z = bread @ meat @ bread
        else:
            cov_z = bread * sigma2
        cov = cov_z / np.outer(scale, scale)
        cov[zero, :] = 0.0
        cov[:, zero] = 0.0
    return LinearModel(beta, float(ym - xm @ beta), cov, zero, int(keep.sum()))
