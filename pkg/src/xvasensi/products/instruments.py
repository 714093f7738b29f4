"""Market instruments used for calibration and hedging.

Quotes are in instrument units: ZC prices in their own currency, FX
forwards as exchange rates and CDS as the upfront value (protection minus
premium, per unit notional) of a contract struck at the par spread of the
reference parameters. CDS legs are undiscounted, like the CVA cash flows,
and assume rates independent of credit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..engine.params import ModelParams
from ..engine.simulate import PathSet
from .affine import cir_survival, zc_bond_price

ZC_PILLARS = (0.01, 0.1, 0.2, 0.5) + tuple(float(k) for k in range(1, 11))
FX_PILLARS = (0.01, 0.1, 0.2, 0.5)
CDS_PILLARS = tuple(float(k) for k in range(1, 11))
PREMIUM_FREQ = 12


@dataclass(frozen=True)
class InstrumentSet:
    E: int
    C: int
    zc_pillars: tuple[float, ...] = ZC_PILLARS
    fx_pillars: tuple[float, ...] = FX_PILLARS
    cds_pillars: tuple[float, ...] = CDS_PILLARS
    lgd: float = 0.6
    spreads: np.ndarray | None = field(default=None, compare=False)

    @property
    def q(self) -> int:
        return (self.E * len(self.zc_pillars) + (self.E - 1) * len(self.fx_pillars)
                + self.C * len(self.cds_pillars))

    @property
    def keys(self) -> list[tuple[str, int, float]]:
        """(curve, index, pillar) per instrument, in quote-vector order."""
        out = [("zc", e, p) for e in range(self.E) for p in self.zc_pillars]
        out += [("fx", e, p) for e in range(1, self.E) for p in self.fx_pillars]
        out += [("cds", c, p) for c in range(1, self.C + 1) for p in self.cds_pillars]
        return out

    @property
    def names(self) -> list[str]:
        return [f"{k}[{i}]@{p:g}" for k, i, p in self.keys]

    @property
    def cds_slice(self) -> slice:
        n = self.E * len(self.zc_pillars) + (self.E - 1) * len(self.fx_pillars)
        return slice(n, self.q)

    def with_par_spreads(self, params: ModelParams) -> "InstrumentSet":
        """Fix every CDS's spread so that it is worth 0 under ``params``."""
        if params.batched:
            raise ValueError("par spreads need a single parameter set")
        spreads = np.empty((self.C, len(self.cds_pillars)))
        for c in range(self.C):
            for k, T in enumerate(self.cds_pillars):
                dates = _premium_dates(T, 0.0)
                S = cir_survival(params.alpha[c], params.delta[c], params.nu[c], params.gamma0[c], dates)
                spreads[c, k] = self.lgd * (1 - S[-1]) / (S.sum() / PREMIUM_FREQ)
        return replace(self, spreads=spreads)


def _premium_dates(T: float, t: float) -> np.ndarray:
    n = int(round(T * PREMIUM_FREQ))
    d = np.arange(1, n + 1) / PREMIUM_FREQ
    return d[d > t + 1e-12]


def _cds_values(iset: InstrumentSet, params: ModelParams, gamma, t: float):
    """Upfront values of alive contracts, shape (..., C * n_pillars)."""
    if iset.spreads is None:
        raise ValueError("CDS spreads not set; call with_par_spreads first")
    cols = []
    for c in range(iset.C):
        al, de, nu = (np.asarray(getattr(params, k))[..., c, None] for k in ("alpha", "delta", "nu"))
        g = np.asarray(gamma)[..., c, None]
        for k, T in enumerate(iset.cds_pillars):
            dates = _premium_dates(T, t)
            if dates.size == 0:
                cols.append(np.zeros(np.shape(g)[:-1]))
                continue
            S = cir_survival(al, de, nu, g, dates - t)
            prot = iset.lgd * (1 - S[..., -1])
            prem = iset.spreads[c, k] * S.sum(axis=-1) / PREMIUM_FREQ
            cols.append(prot - prem)
    return np.stack(cols, axis=-1)


def instrument_prices(params: ModelParams, iset: InstrumentSet, t: float = 0.0, *,
                      r=None, fx=None, gamma=None, alive=None) -> np.ndarray:
    """Quote vector Z, shape (q,) or (paths, q).

    With no state given the initial conditions in ``params`` are used
    (time-0 prices, batched over parameter rows if ``params`` is). With a
    state (r over E economies, fx over E-1, gamma and alive over C) the
    remaining legs from time t are valued; expired pillars are clamped to
    zero time-to-maturity and defaulted clients' CDS are worth 0.
    """
    if r is None:
        r, fx, gamma = params.r0, params.fx0, params.gamma0
    r, fx, gamma = (np.asarray(v, float) for v in (r, fx, gamma))
    parts = []
    zc_ttm = np.maximum(np.asarray(iset.zc_pillars) - t, 0.0)
    P = {}
    for e in range(iset.E):
        a, b, s = (np.asarray(getattr(params, k))[..., e, None] for k in ("a", "b", "sigma_r"))
        parts.append(zc_bond_price(a, b, s, r[..., e, None], zc_ttm))
    fx_ttm = np.maximum(np.asarray(iset.fx_pillars) - t, 0.0)
    for e in range(iset.E):
        a, b, s = (np.asarray(getattr(params, k))[..., e, None] for k in ("a", "b", "sigma_r"))
        P[e] = zc_bond_price(a, b, s, r[..., e, None], fx_ttm)
    for e in range(1, iset.E):
        parts.append(fx[..., e - 1, None] * P[e] / P[0])
    if iset.C:
        cds = _cds_values(iset, params, gamma, t)
        if alive is not None:
            cds = cds * np.repeat(np.asarray(alive, float), len(iset.cds_pillars), axis=-1)
        parts.append(cds)
    shape = np.broadcast_shapes(*(x.shape[:-1] for x in parts))
    return np.concatenate([np.broadcast_to(x, shape + x.shape[-1:]) for x in parts], axis=-1)


def pathwise_prices(ps: PathSet, iset: InstrumentSet, i: int, *,
                    zero_defaulted: bool = False) -> np.ndarray:
    """Z_t on every path of a simulated set at global grid index i.

    By default a client's CDS keeps its pre-default model value after the
    client defaults (the default payment itself is a cash flow). Set
    ``zero_defaulted`` to value those contracts at 0 instead.
    """
    k = ps.local(i)
    E = ps.E
    t = i * ps.grid.h
    alive = 1 - ps.X[:, k] if zero_defaulted else None
    return instrument_prices(ps.params, iset, t, r=ps.r[:, k], fx=ps.Y[:, k, E:2 * E - 1],
                             gamma=ps.gamma[:, k], alive=alive)


def cumulative_cashflows(ps: PathSet, iset: InstrumentSet, i: int) -> np.ndarray:
    """Cumulative instrument cash flows CF_t per path (protection-buyer view).

    Only CDS pay before their pillar: LGD at default (if the default
    falls before both t and the pillar) minus the monthly premia paid
    while the client was alive. ZC and FX quotes carry matured value in
    the clamped price, so they contribute no separate cash flow.
    """
    t = i * ps.grid.h
    out = np.zeros((ps.m, iset.q))
    if not iset.C:
        return out
    tau = np.where(np.isnan(ps.tau), -np.inf, ps.tau)
    cols = []
    for c in range(iset.C):
        for k, T in enumerate(iset.cds_pillars):
            dates = _premium_dates(T, 0.0)
            dates = dates[dates <= t + 1e-12]
            paid = (dates[None, :] < tau[:, c, None]).sum(axis=1) / PREMIUM_FREQ
            hit = (tau[:, c] <= min(t, T) + 1e-12) & np.isfinite(tau[:, c])
            cols.append(iset.lgd * hit - iset.spreads[c, k] * paid)
    out[:, iset.cds_slice] = np.stack(cols, axis=1)
    return out
