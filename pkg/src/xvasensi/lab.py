"""The CVA lab: model, swap portfolio, hedge instruments and the CVA payoff.

A lab fixes the reference parameters rho0, a random swap portfolio struck
at par under rho0 and the calibration instruments with their time-0
quotes z0. Its ``payoff_fn`` is the CVA cash flow xi_{0,T} as a function
of per-path parameter rows, with common drivers for a common seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cva import cashflows_xi, mean_ci
from .engine.params import VOL_FIELDS, ModelParams
from .engine.rng import PORTFOLIO, SCENARIOS, make_stream, stream_id
from .engine.simulate import PathSet, SimGrid, simulate_paths
from .jacobian import CalibrationSpec, market_sensitivities, param_jacobian
from .products.instruments import CDS_PILLARS, FX_PILLARS, ZC_PILLARS, InstrumentSet, instrument_prices
from .products.swaps import Portfolio, PortfolioSpec, generate_portfolio, portfolio_mtm
from .sensitivities import BumpPlan

# Three economies and two clients; intensities are stressed so that a few
# percent of clients default within a year.
DESK_PARAMS = {
    "r0[0]": 0.02, "r0[1]": 0.015, "r0[2]": 0.025,
    "a[0]": 0.15, "a[1]": 0.2, "a[2]": 0.1,
    "b[0]": 0.03, "b[1]": 0.025, "b[2]": 0.035,
    "sigma_r[0]": 0.015, "sigma_r[1]": 0.018, "sigma_r[2]": 0.012,
    "fx0[1]": 1.1, "fx0[2]": 0.9,
    "sigma_fx[1]": 0.1, "sigma_fx[2]": 0.12,
    "gamma0[1]": 0.08, "gamma0[2]": 0.12,
    "alpha[1]": 0.1, "alpha[2]": 0.1,
    "delta[1]": 0.5, "delta[2]": 0.4,
    "nu[1]": 0.08, "nu[2]": 0.1,
}


def desk_params() -> ModelParams:
    return ModelParams.from_mapping(DESK_PARAMS)


@dataclass
class LabConfig:
    params: ModelParams = field(default_factory=desk_params)
    grid: SimGrid = field(default_factory=lambda: SimGrid(n=100, h=0.1, substeps=5))
    n_swaps: int = 50
    portfolio_seed: int = 7
    portfolio_spec: PortfolioSpec = field(default_factory=PortfolioSpec)
    lgd: float = 0.6
    zc_pillars: tuple = ZC_PILLARS
    fx_pillars: tuple = FX_PILLARS
    cds_pillars: tuple = CDS_PILLARS
    fx_drift: str = "rate_differential"
    corr: np.ndarray | None = None
    threads: int = 1
    vol_sigma: float = 0.05
    other_sigma: float = 0.01


class CvaLab:
    def __init__(self, config: LabConfig | None = None, portfolio: Portfolio | None = None):
        self.config = config or LabConfig()
        p = self.config.params
        if p.batched:
            raise ValueError("the lab needs a single reference parameter set")
        self.params = p
        self.layout = p.layout
        self.rho0 = p.to_vector()
        self.names = self.layout.names
        self.grid = self.config.grid
        if portfolio is None:
            gen = make_stream(self.config.portfolio_seed, stream_id(PORTFOLIO)).generator()
            portfolio = generate_portfolio(self.config.n_swaps, p, gen, self.config.portfolio_spec,
                                           T=self.grid.T)
        self.portfolio = portfolio
        self.iset = InstrumentSet(p.E, p.C, tuple(self.config.zc_pillars), tuple(self.config.fx_pillars),
                                  tuple(self.config.cds_pillars), self.config.lgd).with_par_spreads(p)
        self.z0 = instrument_prices(p, self.iset)

    @property
    def E(self) -> int:
        return self.params.E

    @property
    def C(self) -> int:
        return self.params.C

    def as_params(self, rho) -> ModelParams:
        """Parameter rows as ModelParams, collapsed to one set if all rows agree."""
        if isinstance(rho, ModelParams):
            return rho
        rho = np.asarray(rho, float)
        if rho.ndim == 2 and np.all(rho == rho[:1]):
            rho = rho[0]
        return ModelParams.from_vector(rho, self.E, self.C)

    def simulate(self, rho, m: int, seed: int, **kw) -> PathSet:
        params = self.as_params(rho)
        kw.setdefault("mode", "sensis" if params.batched else "baseline")
        kw.setdefault("threads", self.config.threads)
        return simulate_paths(params, self.grid, m, seed, fx_drift=self.config.fx_drift,
                              corr=self.config.corr, **kw)

    def mtm(self, ps: PathSet) -> np.ndarray:
        return portfolio_mtm(ps, self.portfolio)

    def xi0(self, rho, m: int, seed: int) -> np.ndarray:
        ps = self.simulate(rho, m, seed)
        return cashflows_xi(ps, mtm=self.mtm(ps))

    def payoff_fn(self, rho, seed):
        """xi_{0,T} per parameter row, path j driven by the j-th draws of ``seed``."""
        rho = np.atleast_2d(rho)
        return self.xi0(rho, rho.shape[0], seed)

    def price(self, m: int, seed: int) -> tuple[float, float]:
        return mean_ci(self.xi0(self.rho0, m, seed))

    def bump_plan(self) -> BumpPlan:
        """One group per parameter family; volatility families get the larger sigma."""
        groups = tuple(tuple(int(k) for k in g) for g in self.layout.groups_by_field())
        sig = tuple(self.config.vol_sigma if self.layout.field_of[g[0]] in VOL_FIELDS
                    else self.config.other_sigma for g in groups)
        return BumpPlan(groups, sig)

    def draw_eps(self, m: int, sigma: float, seed: int, tag: int = 0) -> np.ndarray:
        """Rows with y = y0 and eps ~ N(eps0, diag((sigma eps0)^2))."""
        rows = np.tile(self.rho0, (m, 1))
        eps = ~self.layout.y_mask
        if sigma > 0:
            z = make_stream(seed, stream_id(SCENARIOS, 0, tag)).normals((m, int(eps.sum())))
            rows[:, eps] += sigma * np.abs(self.rho0[eps]) * z
        return rows

    def calibration_spec(self) -> CalibrationSpec:
        def price(rho):
            return instrument_prices(ModelParams.from_vector(rho, self.E, self.C), self.iset)
        return CalibrationSpec(price, self.rho0, self.layout.free_mask, names=self.names)

    def jacobian(self, method: str = "gauss-newton") -> np.ndarray:
        spec = self.calibration_spec()
        return param_jacobian(spec, self.z0, spec.psi(), method=method)

    def market_sensis(self, model_sensis, jac=None) -> np.ndarray:
        jac = self.jacobian() if jac is None else jac
        return market_sensitivities(np.asarray(model_sensis)[self.layout.free_mask], jac)

    @property
    def free_names(self) -> list[str]:
        return [n for n, f in zip(self.names, self.layout.free_mask) if f]
