"""Hedged losses of the CVA desk and the sensitivities that compress them.

A loss sample is ``L(Delta) = a - B Delta - c`` where ``a`` is the CVA leg
(CVA move, plus realized default losses in run-off mode), ``B`` holds the
hedge-instrument gains per unit and ``c`` is the trend making the sample
mean of L zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..engine.rng import TRAINING, make_stream, stream_id
from ..learners.linear import fit_linear
from .measures import var_es

RATIO_CAP = 1e12


@dataclass(frozen=True)
class HedgeData:
    cva_leg: np.ndarray
    hedge_leg: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.cva_leg, float)
        B = np.asarray(self.hedge_leg, float)
        if B.ndim == 1:
            B = B[:, None]
        if B.shape[0] != a.size:
            raise ValueError("hedge leg and CVA leg differ in sample count")
        object.__setattr__(self, "cva_leg", a)
        object.__setattr__(self, "hedge_leg", B)

    @property
    def q(self) -> int:
        return self.hedge_leg.shape[1]

    def loss(self, delta=None) -> tuple[np.ndarray, float]:
        """Centred loss samples and the trend c for hedge ratios ``delta``."""
        raw = self.cva_leg.copy()
        if delta is not None and self.q:
            delta = np.asarray(delta, float)
            if delta.shape != (self.q,):
                raise ValueError(f"Delta has shape {delta.shape}, expected ({self.q},)")
            raw = raw - self.hedge_leg @ delta
        c = float(raw.mean())
        return raw - c, c


def build_runoff_loss(delta, delta_pi, loss_C, delta_Z, cash_flows) -> tuple[np.ndarray, float]:
    """L = dPi + C_t - (dZ_t + CF_t)^T Delta - c."""
    data = runoff_data(delta_pi, loss_C, delta_Z, cash_flows)
    return data.loss(delta)


def runoff_data(delta_pi, loss_C, delta_Z, cash_flows) -> HedgeData:
    return HedgeData(np.asarray(delta_pi) + np.asarray(loss_C), np.asarray(delta_Z) + np.asarray(cash_flows))


def build_runon_loss(delta, delta_pi, delta_Z) -> tuple[np.ndarray, float]:
    """L = dPi_(t) - dZ_(t)^T Delta - c (no default losses in run-on mode)."""
    return HedgeData(delta_pi, delta_Z).loss(delta)


def ple_sensitivities(data: HedgeData, ridge: float = 1e-8) -> np.ndarray:
    """Least squares of the centred CVA leg on the centred hedge leg."""
    if data.q == 0:
        return np.zeros(0)
    return fit_linear(data.hedge_leg, data.cva_leg, ridge=ridge, intercept=True).coef


def ls_sensitivities(cashflow_diff, delta_Z, ridge: float = 1e-8) -> np.ndarray:
    """Regress raw cash-flow differences on the instrument price moves."""
    dZ = np.atleast_2d(np.asarray(delta_Z, float))
    if not np.any(dZ):
        return np.zeros(dZ.shape[1])
    return fit_linear(dZ, cashflow_diff, ridge=ridge, intercept=True).coef


@dataclass(frozen=True)
class EcConfig:
    alpha: float = 0.95
    epochs: int = 500
    batch_size: int = 1024
    lr: float = 1e-2
    lr_final: float = 1e-4
    ridge: float = 1e-8
    warm_start: bool = True
    seed: int = 0


@dataclass(frozen=True)
class EcResult:
    delta: np.ndarray
    k: float
    k_adam: float
    objective: float
    converged: bool


def rockafellar_objective(L, k, alpha):
    return float(k + np.maximum(L - k, 0.0).mean() / (1 - alpha))


def ec_sensitivities(data: HedgeData, config: EcConfig = EcConfig()) -> EcResult:
    """Minimize k + E[(L - k)^+] / (1 - alpha) jointly over (Delta, k) by Adam.

    Works in standardized coordinates. The best full-sample iterate is
    kept, and k is finally set to the exact minimizer for that Delta (the
    empirical alpha-quantile of L), which is an exact line minimization of
    the convex objective in k.
    """
    a = data.cva_leg - data.cva_leg.mean()
    B = data.hedge_leg - data.hedge_leg.mean(axis=0)
    sa = float(a.std()) or 1.0
    sB = B.std(axis=0)
    sB = np.where(sB > 0, sB, 1.0)
    at, Bt = a / sa, B / sB
    alpha = config.alpha
    q = data.q
    w = (ple_sensitivities(data) * sB / sa) if (config.warm_start and q) else np.zeros(q)
    k = var_es(a, alpha)[0] / sa

    def full(w):
        L = at - Bt @ w
        kk = var_es(L, alpha)[0]
        return rockafellar_objective(L, kk, alpha) + config.ridge * float(w @ w), kk

    best_obj, _ = full(w)
    best_w = w.copy()
    gen = make_stream(config.seed, stream_id(TRAINING, 1)).generator()
    m = a.size
    bs = min(config.batch_size, m)
    theta = np.concatenate([w, [k]])
    m1 = np.zeros_like(theta)
    m2 = np.zeros_like(theta)
    b1, b2, eps = 0.9, 0.999, 1e-8
    decay = (config.lr_final / config.lr) ** (1 / max(config.epochs - 1, 1))
    lr, step = config.lr, 0
    history = []
    for _ in range(config.epochs):
        perm = gen.permutation(m)
        for lo in range(0, m, bs):
            idx = perm[lo : lo + bs]
            w, k = theta[:q], theta[q]
            L = at[idx] - Bt[idx] @ w
            hit = (L > k).astype(float)
            gk = 1.0 - hit.mean() / (1 - alpha)
            gw = -(Bt[idx].T @ hit) / idx.size / (1 - alpha) + 2 * config.ridge * w
            g = np.concatenate([gw, [gk]])
            step += 1
            m1 = b1 * m1 + (1 - b1) * g
            m2 = b2 * m2 + (1 - b2) * g * g
            theta = theta - lr * (m1 / (1 - b1**step)) / (np.sqrt(m2 / (1 - b2**step)) + eps)
        obj, _ = full(theta[:q])
        history.append(obj)
        if obj < best_obj:
            best_obj, best_w = obj, theta[:q].copy()
        lr *= decay
    tail = np.asarray(history[-max(len(history) // 10, 1):])
    converged = bool(np.ptp(tail) <= 1e-2 * abs(best_obj) + 1e-4)
    delta = best_w * sa / sB
    L, _ = data.loss(delta)
    k_final = var_es(L, alpha)[0]
    return EcResult(delta, k_final, float(theta[q] * sa), best_obj * sa, converged)


def hedge_metrics(data: HedgeData, delta, alpha: float = 0.95) -> dict:
    L, c = data.loss(delta)
    return {"UPL": float(L.std()), "EC": var_es(L, alpha)[1], "c": c}


def _ratio(base, value):
    if value == 0:
        return RATIO_CAP if base != 0 else 1.0
    return min(abs(base) / abs(value), RATIO_CAP)


def compression_report(candidates: dict, data: HedgeData, alpha: float = 0.95) -> list[dict]:
    """UPL, EC and trend c per candidate Delta with ratios versus Delta = 0."""
    base = hedge_metrics(data, None, alpha)
    rows = [{"method": "unhedged", **base, "UPL_ratio": 1.0, "EC_ratio": 1.0, "c_ratio": 1.0}]
    for name, delta in candidates.items():
        met = hedge_metrics(data, delta, alpha)
        rows.append({"method": name, **met,
                     "UPL_ratio": _ratio(base["UPL"], met["UPL"]),
                     "EC_ratio": _ratio(base["EC"], met["EC"]),
                     "c_ratio": _ratio(base["c"], met["c"])})
    return rows


def report_to_csv(rows, path, extra: dict | None = None):
    keys = list(extra or {}) + ["method", "UPL", "EC", "c", "UPL_ratio", "EC_ratio", "c_ratio"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            vals = [*(extra or {}).values()] + [r["method"]]
            vals += [f"{r[k]:.6g}" for k in keys[len(extra or {}) + 1:]]
            w.writerow(vals)
