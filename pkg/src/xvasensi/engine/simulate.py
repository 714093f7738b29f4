"""Euler simulation of the Vasicek / FX / CIR factors and default sampling."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .params import ModelParams
from .rng import DEFAULTS, DIFFUSION, make_stream, stream_id

BLOCK_SIZE = 4096
MODES = ("baseline", "risk", "sensis")


@dataclass(frozen=True)
class SimGrid:
    n: int = 100
    h: float = 0.1
    substeps: int = 25

    def __post_init__(self):
        if self.n < 1 or self.h <= 0 or self.substeps < 1:
            raise ValueError("SimGrid needs n >= 1, h > 0, substeps >= 1")

    @property
    def T(self) -> float:
        return self.n * self.h

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(self.n + 1)

    def index_of(self, t: float) -> int:
        """Grid index of time t; raises if t is off the grid."""
        i = int(round(t / self.h))
        if not (0 <= i <= self.n) or abs(i * self.h - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not on the pricing grid (h={self.h}, n={self.n})")
        return i


@dataclass(frozen=True)
class PathSet:
    """Simulated factors on pricing dates ``start..stop`` (stop defaults to n).

    Y holds rates (E columns), FX levels (E-1) and the raw CIR state (C);
    ``gamma`` is its positive part, the intensity actually used.
    ``tau`` is the default time, inf if no default in the window and nan if
    the client was already in default at ``start``.
    """

    Y: np.ndarray
    X: np.ndarray
    gamma: np.ndarray
    tau: np.ndarray
    params: ModelParams
    grid: SimGrid
    start: int = 0
    mode: str = "baseline"
    stop: int | None = None

    @property
    def end(self) -> int:
        return self.grid.n if self.stop is None else self.stop

    @property
    def m(self) -> int:
        return self.Y.shape[0]

    @property
    def E(self) -> int:
        return self.params.E

    @property
    def C(self) -> int:
        return self.params.C

    @property
    def times(self) -> np.ndarray:
        return self.grid.times[self.start : self.end + 1]

    @property
    def r(self) -> np.ndarray:
        return self.Y[:, :, : self.E]

    @property
    def fx(self) -> np.ndarray:
        """FX to the reference currency for every economy (column 0 is 1)."""
        fx = self.Y[:, :, self.E : 2 * self.E - 1]
        return np.concatenate([np.ones(fx.shape[:2] + (1,)), fx], axis=2)

    def local(self, i: int) -> int:
        """Position on the time axis of global grid index i."""
        if not self.start <= i <= self.end:
            raise ValueError(f"grid index {i} outside simulated window [{self.start}, {self.end}]")
        return i - self.start

    def state(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """(X_t, Y_t) at global grid index i, with Y's CIR part raw."""
        k = self.local(i)
        return self.X[:, k, :], self.Y[:, k, :]


def initial_state(params: ModelParams) -> np.ndarray:
    return np.concatenate([params.r0, np.asarray(params.fx0), params.gamma0], axis=-1)


def _cols(v: np.ndarray, rows: slice | None) -> np.ndarray:
    return v if rows is None or v.ndim == 1 else v[rows]


def _simulate_block(params, grid, y0, seed, block, sub, fx_drift, chol, start, stop):
    B, E, C = y0.shape[0], params.E, params.C
    F = E - 1
    dim = E + F + C
    dt = grid.h / grid.substeps
    sq = np.sqrt(dt)
    rows = slice(block * BLOCK_SIZE, block * BLOCK_SIZE + B)
    a, b, sr = (_cols(v, rows) for v in (params.a, params.b, params.sigma_r))
    sfx = _cols(params.sigma_fx, rows)
    al, de, nu = (_cols(v, rows) for v in (params.alpha, params.delta, params.nu))
    r = y0[:, :E].copy()
    lx = np.log(y0[:, E : E + F])
    g = y0[:, E + F :].copy()
    steps = stop - start
    out = np.empty((B, steps + 1, dim))
    out[:, 0] = y0
    gen = make_stream(seed, stream_id(DIFFUSION, block, sub)).generator()
    zero_drift = fx_drift == "zero"
    for j in range(1, steps + 1):
        dW = gen.standard_normal((grid.substeps, B, dim)) * sq
        if chol is not None:
            dW = dW @ chol.T
        for s in range(grid.substeps):
            w = dW[s]
            if F:
                drift = -0.5 * sfx**2 if zero_drift else r[:, :1] - r[:, 1:] - 0.5 * sfx**2
                lx += drift * dt + sfx * w[:, E : E + F]
            r += a * (b - r) * dt + sr * w[:, :E]
            gp = np.maximum(g, 0.0)
            g += de * (al - gp) * dt + nu * np.sqrt(gp) * w[:, E + F :]
        out[:, j, :E] = r
        out[:, j, E : E + F] = np.exp(lx)
        out[:, j, E + F :] = g
    return out


def sample_defaults(gamma: np.ndarray, grid: SimGrid, seed: int, *, start: int = 0,
                    x0: np.ndarray | None = None, sub: int = 0):
    """Doubly stochastic default indicators from intensity paths.

    Client c defaults in step k (time (start+k+1)h) when the cumulated
    intensity h * sum(gamma[..k]) first reaches an Exp(1) threshold drawn
    per (path, client) from the block streams. Returns (X, tau).
    """
    if np.any(gamma < 0):
        raise ValueError("intensities must be non-negative")
    m, steps1, C = gamma.shape
    thresholds = np.empty((m, C))
    for blk in range(-(-m // BLOCK_SIZE)):
        lo, hi = blk * BLOCK_SIZE, min(m, (blk + 1) * BLOCK_SIZE)
        gen = make_stream(seed, stream_id(DEFAULTS, blk, sub)).generator()
        thresholds[lo:hi] = gen.standard_exponential((hi - lo, C))
    H = np.zeros((m, steps1, C))
    H[:, 1:] = grid.h * np.cumsum(gamma[:, :-1], axis=1)
    X = H >= thresholds[:, None, :]
    X[:, 0] = False
    dead = np.zeros((m, C), bool) if x0 is None else np.asarray(x0, bool)
    X |= dead[:, None, :]
    fresh = X[:, -1] & ~dead
    first = np.argmax(X, axis=1)
    tau = np.where(fresh, (start + first) * grid.h, np.inf)
    tau[dead] = np.nan
    return X.astype(np.int8), tau


def _check_mode(params: ModelParams, mode: str, n_paths: int):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if params.batched and params.n_batch != n_paths:
        raise ValueError(f"{params.n_batch} parameter rows for {n_paths} paths")
    if mode == "baseline" and params.batched:
        vec = params.to_vector()
        if not np.all(vec == vec[:1]):
            raise ValueError("baseline mode needs a single parameter set")
    if mode == "risk" and params.batched:
        y = initial_state(params)
        if not np.all(y == y[:1]):
            raise ValueError("risk mode keeps the initial conditions fixed across paths")


def simulate_paths(params: ModelParams, grid: SimGrid, n_paths: int, seed: int, *,
                   mode: str = "baseline", start: int = 0, y0: np.ndarray | None = None,
                   x0: np.ndarray | None = None, threads: int = 1, sub: int = 0,
                   fx_drift: str = "rate_differential", corr: np.ndarray | None = None,
                   stop: int | None = None) -> PathSet:
    """Simulate ``n_paths`` paths from grid index ``start`` to ``stop`` (default n).

    Path j uses row j of ``params`` if batched. Paths are processed in
    fixed blocks of BLOCK_SIZE, block k drawing from the stream
    ``(seed, DIFFUSION|k|sub)``, so results don't depend on ``threads``.
    ``y0``/``x0`` override the initial factors and default indicators
    (Markov restart for nested simulation).
    """
    _check_mode(params, mode, n_paths)
    if fx_drift not in ("rate_differential", "zero"):
        raise ValueError("fx_drift must be 'rate_differential' or 'zero'")
    stop = grid.n if stop is None else int(stop)
    if not 0 <= start < stop <= grid.n:
        raise ValueError("need 0 <= start < stop <= n")
    E, C = params.E, params.C
    dim = 2 * E - 1 + C
    if y0 is None:
        y0 = np.broadcast_to(initial_state(params), (n_paths, dim))
    y0 = np.asarray(y0, float)
    if y0.shape != (n_paths, dim):
        raise ValueError(f"initial state shape {y0.shape}, expected {(n_paths, dim)}")
    chol = None
    if corr is not None:
        corr = np.asarray(corr, float)
        if corr.shape != (dim, dim):
            raise ValueError(f"correlation matrix must be {dim}x{dim}")
        chol = np.linalg.cholesky(corr)
    n_blocks = -(-n_paths // BLOCK_SIZE)

    def run(blk):
        lo, hi = blk * BLOCK_SIZE, min(n_paths, (blk + 1) * BLOCK_SIZE)
        return _simulate_block(params, grid, y0[lo:hi], seed, blk, sub, fx_drift, chol, start, stop)

    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(n_blocks)))
    else:
        parts = [run(k) for k in range(n_blocks)]
    Y = np.concatenate(parts, axis=0)
    gamma = np.maximum(Y[:, :, 2 * E - 1 :], 0.0)
    X, tau = sample_defaults(gamma, grid, seed, start=start, x0=x0, sub=sub)
    return PathSet(Y=Y, X=X, gamma=gamma, tau=tau, params=params, grid=grid, start=start, mode=mode,
                   stop=None if stop == grid.n else stop)
