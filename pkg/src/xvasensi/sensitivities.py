"""Fast bump sensitivities with common random numbers.

A payoff function has the signature ``f(rho, seed) -> (m,)`` where
``rho`` is an (m, p) array of parameter rows and path j uses the j-th
driver of the stream family identified by ``seed``. Calling it twice with
the same seed reuses the same drivers, which is what makes the
symmetrized difference ``xi(rho) - xi(2 rho0 - rho)`` low-noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .engine.rng import BUMPS, make_stream, stream_id
from .learners.linear import RIDGE, fit_linear
from .learners.mlp import TrainConfig, fit_mlp

Z95 = 1.96
ABS_BUMP = 1e-4


def symmetrize(rho, rho0):
    """Mirror image of rho through rho0."""
    rho, rho0 = np.asarray(rho, float), np.asarray(rho0, float)
    if rho.shape[-1] != rho0.shape[-1]:
        raise ValueError("dimension mismatch")
    return 2.0 * rho0 - rho


def bump_scale(rho0, abs_floor: float = ABS_BUMP) -> np.ndarray:
    """Unit of relative bumps; zero parameters fall back to an absolute size."""
    s = np.abs(np.asarray(rho0, float))
    return np.where(s > 0, s, abs_floor)


def block_bounds(sizes, m: int) -> np.ndarray:
    """Block boundaries with block g holding a share sizes[g]/sum of the paths.

    Path j falls in block k when floor(j * P / m) lands in group k's
    cumulative range, P = sum(sizes); for singleton groups this is the
    rule "component floor(j p / m) is bumped on path j".
    """
    cum = np.concatenate([[0], np.cumsum(sizes)])
    P = int(cum[-1])
    return (cum * m + P - 1) // P


@dataclass(frozen=True)
class BumpPlan:
    """Partition of the parameters into groups bumped on disjoint path blocks.

    In ``gaussian`` mode the bumped group is drawn from
    N(rho0, diag((sigma * scale)^2)); in ``deterministic`` mode it is
    shifted by ``+sigma * scale`` on every path of its block.
    """

    groups: tuple
    sigmas: tuple
    mode: str = "gaussian"

    def __post_init__(self):
        if self.mode not in ("gaussian", "deterministic"):
            raise ValueError("mode must be 'gaussian' or 'deterministic'")
        if len(self.groups) != len(self.sigmas):
            raise ValueError("one sigma per group")
        flat = np.concatenate([np.asarray(g, int) for g in self.groups])
        if np.unique(flat).size != flat.size or not np.array_equal(np.sort(flat), np.arange(flat.size)):
            raise ValueError("groups must partition 0..p-1")
        if self.mode == "deterministic" and any(len(g) != 1 for g in self.groups):
            raise ValueError("deterministic plans bump one component per block")

    @property
    def p(self) -> int:
        return sum(len(g) for g in self.groups)

    @classmethod
    def one_hot(cls, p: int, rel: float = 0.01) -> "BumpPlan":
        return cls(tuple((k,) for k in range(p)), (rel,) * p, "deterministic")

    @classmethod
    def single(cls, p: int, sigma: float = 0.01) -> "BumpPlan":
        return cls((tuple(range(p)),), (sigma,))

    def bounds(self, m: int) -> np.ndarray:
        return block_bounds([len(g) for g in self.groups], m)

    def draw(self, rho0, m: int, seed: int, abs_floor: float = ABS_BUMP) -> np.ndarray:
        """Bumped parameter rows, shape (m, p)."""
        rho0 = np.asarray(rho0, float)
        scale = bump_scale(rho0, abs_floor)
        rho = np.tile(rho0, (m, 1))
        bounds = self.bounds(m)
        for g, (idx, sig) in enumerate(zip(self.groups, self.sigmas)):
            lo, hi = bounds[g], bounds[g + 1]
            idx = np.asarray(idx, int)
            if self.mode == "deterministic":
                rho[lo:hi, idx] += sig * scale[idx]
            else:
                z = make_stream(seed, stream_id(BUMPS, g)).normals((hi - lo, idx.size))
                rho[lo:hi, idx] += sig * scale[idx] * z
        return rho


@dataclass
class SensitivityReport:
    names: list
    estimate: np.ndarray
    ci: np.ndarray | None
    method: str
    gammas: np.ndarray | None = None
    gamma_ci: np.ndarray | None = None
    failed: list = field(default_factory=list)

    def covers(self, truth) -> np.ndarray:
        if self.ci is None:
            raise ValueError(f"{self.method} sensitivities carry no confidence interval")
        return np.abs(self.estimate - np.asarray(truth)) <= self.ci

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter_name", "estimate", "ci_halfwidth", "method"])
            for k, name in enumerate(self.names):
                ci = "" if self.ci is None or not np.isfinite(self.ci[k]) else f"{self.ci[k]:.6g}"
                w.writerow([name, f"{self.estimate[k]:.6g}", ci, self.method])

    def gammas_to_csv(self, path):
        if self.gammas is None:
            raise ValueError("no gammas in this report")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter_name", "gamma", "ci_halfwidth", "method"])
            for k, name in enumerate(self.names):
                w.writerow([name, f"{self.gammas[k]:.6g}", f"{self.gamma_ci[k]:.6g}", self.method])


def _names(names, p):
    return list(names) if names is not None else [f"rho[{k}]" for k in range(p)]


def benchmark_bump(payoff_fn, rho0, m: int, seed: int, *, rel_bump: float = 0.01,
                   abs_floor: float = ABS_BUMP, gammas: bool = True, names=None) -> SensitivityReport:
    """Central differences from 2p + 1 repricings on common drivers."""
    if m < 2:
        raise ValueError("m must be >= 2")
    rho0 = np.asarray(rho0, float)
    p = rho0.size
    bump = rel_bump * bump_scale(rho0, abs_floor)
    base = payoff_fn(np.tile(rho0, (m, 1)), seed) if gammas else None
    est, ci, gam, gci = (np.empty(p) for _ in range(4))
    for k in range(p):
        e = np.zeros(p)
        e[k] = bump[k]
        up = payoff_fn(np.tile(rho0 + e, (m, 1)), seed)
        dn = payoff_fn(np.tile(rho0 - e, (m, 1)), seed)
        d = (up - dn) / (2 * bump[k])
        est[k], ci[k] = d.mean(), Z95 * d.std(ddof=1) / np.sqrt(m)
        if gammas:
            g2 = (up - 2 * base + dn) / bump[k] ** 2
            gam[k], gci[k] = g2.mean(), Z95 * g2.std(ddof=1) / np.sqrt(m)
    return SensitivityReport(_names(names, p), est, ci, "benchmark",
                             gam if gammas else None, gci if gammas else None)


def bump_sample(payoff_fn, rho0, m: int, plan: BumpPlan, seed: int, *, abs_floor: float = ABS_BUMP):
    """Bumped rows and symmetrized payoff differences on common drivers."""
    rho0 = np.asarray(rho0, float)
    if plan.p != rho0.size:
        raise ValueError("plan dimension differs from rho0")
    rho = plan.draw(rho0, m, seed, abs_floor)
    vs = payoff_fn(rho, seed) - payoff_fn(symmetrize(rho, rho0), seed)
    return rho, vs


def _block_mean(vs, shift):
    """Slope for a constant single feature: the block mean over the shift."""
    n = vs.size
    est = vs.mean() / shift
    se = vs.std(ddof=1) / np.sqrt(n) / abs(shift)
    return est, se


def regress_bumps(rho, vs, rho0, plan: BumpPlan, *, ridge: float = RIDGE,
                  regression: str = "svd", abs_floor: float = ABS_BUMP):
    """Per-group no-intercept regressions of vs on rho - rho0, halved.

    Returns (estimate, ci, failed component indices). A group whose
    design is a single constant column reduces to the block mean, which
    is how the smart bump is computed too.
    """
    rho0 = np.asarray(rho0, float)
    m, p = rho.shape
    bounds = plan.bounds(m)
    est, ci = np.full(p, np.nan), np.full(p, np.nan)
    failed = []
    scale = bump_scale(rho0, abs_floor)
    for g, (idx, sig) in enumerate(zip(plan.groups, plan.sigmas)):
        idx = np.asarray(idx, int)
        lo, hi = bounds[g], bounds[g + 1]
        if hi - lo < idx.size + 2:
            raise ValueError(f"block {g} has {hi - lo} paths for {idx.size} parameters")
        X = rho[lo:hi][:, idx] - rho0[idx]
        y = vs[lo:hi]
        if idx.size == 1 and np.all(X == X[0, 0]):
            b, se = _block_mean(y, X[0, 0])
            b, se = np.array([b]), np.array([se])
        elif regression == "analytic" and plan.mode == "gaussian":
            # b_k = E[vs (rho_k - rho0_k)] / var_k, a plain mean of per-path terms
            terms = X * y[:, None] / (sig * scale[idx]) ** 2
            b = terms.mean(axis=0)
            se = terms.std(axis=0, ddof=1) / np.sqrt(hi - lo)
        else:
            fit = fit_linear(X, y, ridge=ridge, stderr="robust")
            b, se = fit.coef, fit.stderr
            if fit.rank < idx.size or fit.zero_columns.any():
                failed.extend(int(k) for k in idx)
        est[idx] = b / 2
        ci[idx] = Z95 * se / 2
    return est, ci, failed


def linear_bump(payoff_fn, rho0, m: int, plan: BumpPlan, seed: int, *, ridge: float = RIDGE,
                regression: str = "svd", abs_floor: float = ABS_BUMP, names=None,
                method: str = "linear") -> SensitivityReport:
    rho, vs = bump_sample(payoff_fn, rho0, m, plan, seed, abs_floor=abs_floor)
    est, ci, failed = regress_bumps(rho, vs, rho0, plan, ridge=ridge, regression=regression,
                                    abs_floor=abs_floor)
    return SensitivityReport(_names(names, len(rho0)), est, ci, method, failed=failed)


def smart_bump(payoff_fn, rho0, m: int, seed: int, *, rel_bump: float = 0.01,
               abs_floor: float = ABS_BUMP, names=None) -> SensitivityReport:
    """One deterministic +rel bump per component on its own block of m/p paths."""
    p = np.asarray(rho0).size
    if m < 2 * p:
        raise ValueError(f"smart bump needs m >= 2p (m={m}, p={p})")
    return linear_bump(payoff_fn, rho0, m, BumpPlan.one_hot(p, rel_bump), seed,
                       abs_floor=abs_floor, names=names, method="smart")


def aad_bump(payoff_fn, rho0, m: int, plan: BumpPlan, seed: int, *, hidden=(64, 64),
             train: TrainConfig = TrainConfig(), abs_floor: float = ABS_BUMP,
             names=None) -> SensitivityReport:
    """Half the input gradient at rho0 of a net fitted to the symmetrized differences."""
    rho0 = np.asarray(rho0, float)
    rho, vs = bump_sample(payoff_fn, rho0, m, plan, seed, abs_floor=abs_floor)
    net = fit_mlp(rho - rho0, vs, hidden, train)
    grad = net.input_gradient(np.zeros_like(rho0))
    return SensitivityReport(_names(names, rho0.size), grad / 2, None, "aad")


def fit_price_learner(payoff_fn, rho0, m: int, plan: BumpPlan, seed: int, *, hidden=(64, 64),
                      train: TrainConfig = TrainConfig(), abs_floor: float = ABS_BUMP):
    """Price net fitted to raw payoffs xi(rho) on randomized parameters."""
    rho0 = np.asarray(rho0, float)
    rho = plan.draw(rho0, m, seed, abs_floor)
    return fit_mlp(rho - rho0, payoff_fn(rho, seed), hidden, train)


def naive_aad(price_model, rho0, *, centered: bool = True, names=None) -> SensitivityReport:
    """Input gradient of a price learner at rho0 (inputs rho - rho0 if centered)."""
    rho0 = np.asarray(rho0, float)
    x = np.zeros_like(rho0) if centered else rho0
    return SensitivityReport(_names(names, rho0.size), price_model.input_gradient(x), None,
                             "naive-aad")
