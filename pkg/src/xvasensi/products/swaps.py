"""Interest-rate swaps, random portfolios and pathwise client MtM.

The floating leg of a swap is valued as ``1 - P(t, T_N)`` at every date,
i.e. as if it reset at t. This keeps the MtM a function of the current
short rate only (Markovian), which is what the CVA learners assume.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..engine.params import ModelParams
from ..engine.simulate import PathSet, SimGrid
from .affine import vasicek_AB, zc_bond_price

CSV_HEADER = ["economy", "counterparty", "notional", "maturity", "strike", "freq", "payer"]


@dataclass(frozen=True)
class Swap:
    """Fixed-for-floating swap; ``counterparty`` is labelled 1..C."""

    economy: int
    counterparty: int
    notional: float
    maturity: float
    strike: float
    freq: int = 1
    payer: bool = True

    def payment_times(self, after: float = 0.0) -> np.ndarray:
        n = int(round(self.maturity * self.freq))
        t = np.arange(1, n + 1) / self.freq
        return t[t > after + 1e-12]


def _scalar(v, economy):
    return np.asarray(v)[..., economy]


def swap_value(swap: Swap, r, fx, params: ModelParams, t: float = 0.0):
    """Value in the reference currency given the state (r, fx) at time t.

    ``r`` and ``fx`` are the short rate and FX level of the swap's own
    economy (fx is ignored for economy 0); both may be arrays over paths.
    """
    if t > swap.maturity + 1e-12:
        raise ValueError("valuation date after swap maturity")
    e = swap.economy
    a, b, s = (_scalar(getattr(params, k), e) for k in ("a", "b", "sigma_r"))
    pay = swap.payment_times(after=t)
    if pay.size == 0:
        return np.zeros_like(np.asarray(r, float))
    P = zc_bond_price(a[..., None], b[..., None], s[..., None], np.asarray(r, float)[..., None], pay - t)
    value = 1.0 - P[..., -1] - swap.strike / swap.freq * P.sum(axis=-1)
    value = swap.notional * (value if swap.payer else -value)
    return value * (fx if e > 0 else 1.0)


def par_strike(economy, maturity, freq, params: ModelParams) -> float:
    e = economy
    pay = np.arange(1, int(round(maturity * freq)) + 1) / freq
    P = zc_bond_price(params.a[e], params.b[e], params.sigma_r[e], params.r0[e], pay)
    return float((1.0 - P[-1]) / (P.sum() / freq))


@dataclass(frozen=True)
class PortfolioSpec:
    """Ranges for random swap characteristics."""

    maturity_years: tuple[int, int] = (1, 10)
    notional_range: tuple[float, float] = (1e4, 1e5)
    freqs: tuple[int, ...] = (1, 2)


@dataclass
class Portfolio:
    swaps: list[Swap] = field(default_factory=list)

    def __len__(self):
        return len(self.swaps)

    def __iter__(self):
        return iter(self.swaps)

    def column(self, name):
        return np.array([getattr(s, name) for s in self.swaps])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for s in self.swaps:
                w.writerow([s.economy, s.counterparty, repr(s.notional), repr(s.maturity),
                            repr(s.strike), s.freq, int(s.payer)])

    @classmethod
    def from_csv(cls, path) -> "Portfolio":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if rows and list(rows[0].keys()) != CSV_HEADER:
            raise ValueError(f"portfolio header must be {','.join(CSV_HEADER)}")
        return cls([Swap(int(r["economy"]), int(r["counterparty"]), float(r["notional"]),
                         float(r["maturity"]), float(r["strike"]), int(r["freq"]),
                         bool(int(r["payer"]))) for r in rows])


def generate_portfolio(count: int, params: ModelParams, gen: np.random.Generator,
                       spec: PortfolioSpec = PortfolioSpec(), T: float | None = None) -> Portfolio:
    """Random swaps struck at par under ``params`` (their time-0 value is 0)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    lo, hi = spec.maturity_years
    if T is not None:
        hi = min(hi, int(np.floor(T + 1e-9)))
    swaps = []
    for _ in range(count):
        e = int(gen.integers(params.E))
        c = int(gen.integers(params.C)) + 1
        mat = float(gen.integers(lo, hi + 1))
        freq = int(gen.choice(spec.freqs))
        notional = float(gen.uniform(*spec.notional_range))
        payer = bool(gen.integers(2))
        swaps.append(Swap(e, c, notional, mat, par_strike(e, mat, freq, params), freq, payer))
    return Portfolio(swaps)


def portfolio_mtm(ps: PathSet, portfolio: Portfolio) -> np.ndarray:
    """Client MtM in the reference currency, shape (paths, dates, C).

    Payment dates must sit on the pricing grid. Per economy the bond
    prices are evaluated once per date on the union of payment dates and
    each swap's annuity is read off a cumulative sum.
    """
    grid, params = ps.grid, ps.params
    m, steps1, C = ps.m, ps.times.size, ps.C
    out = np.zeros((m, steps1, C))
    r_all, fx_all = ps.r, ps.fx
    for e in range(ps.E):
        sw = [s for s in portfolio if s.economy == e]
        if not sw:
            continue
        step = {}
        for s in sw:
            k = 1.0 / (s.freq * grid.h)
            if abs(k - round(k)) > 1e-9 or abs(s.maturity / grid.h - round(s.maturity / grid.h)) > 1e-9:
                raise ValueError("swap payment dates must lie on the pricing grid")
            step[s.freq] = int(round(k))
        mat_idx = np.array([int(round(s.maturity / grid.h)) for s in sw])
        # swaps may outlive the simulated horizon, so the lattice runs to the last maturity
        last = max(grid.n, int(mat_idx.max()))
        A, B = vasicek_AB(params.a[..., e:e + 1], params.b[..., e:e + 1],
                          params.sigma_r[..., e:e + 1], grid.h * np.arange(last + 1))
        A, B = np.atleast_2d(A), np.atleast_2d(B)
        sign = np.array([1.0 if s.payer else -1.0 for s in sw]) * np.array([s.notional for s in sw])
        kdelta = np.array([s.strike / s.freq for s in sw])
        onehot = np.zeros((len(sw), C))
        onehot[np.arange(len(sw)), [s.counterparty - 1 for s in sw]] = 1.0
        for jl in range(steps1):
            j = ps.start + jl
            alive = mat_idx > j
            if not alive.any():
                continue
            r = r_all[:, jl, e][:, None]
            cum = {}
            Pmat = {}
            for f, st in step.items():
                lattice = np.arange(st, last + 1, st)
                lattice = lattice[lattice > j]
                P = np.exp(A[:, lattice - j] - B[:, lattice - j] * r)
                cum[f] = (lattice, np.cumsum(P, axis=1), P)
            vals = np.zeros((m, len(sw)))
            for i, s in enumerate(sw):
                if not alive[i]:
                    continue
                lattice, cs, P = cum[s.freq]
                pos = np.searchsorted(lattice, mat_idx[i])
                vals[:, i] = sign[i] * (1.0 - P[:, pos] - kdelta[i] * cs[:, pos])
            mtm = vals @ onehot
            if e > 0:
                mtm *= fx_all[:, jl, e][:, None]
            out[:, jl, :] += mtm
    return out
