"""End-to-end experiments shared by the command line and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine.params import ModelParams
from .lab import CvaLab
from .learners.mlp import TrainConfig
from .learners.pipelines import (learn_conditional_cva, learn_delta_cva_runon, runon_sample,
                                 runon_scenarios)
from .products.basket import BasketSpec, basket_call_analytic, basket_payoff_fn
from .products.instruments import instrument_prices
from .risk.hedging import (EcConfig, HedgeData, compression_report, ec_sensitivities,
                           ls_sensitivities, ple_sensitivities)
from .risk.scenarios import runoff_sample
from .sensitivities import (BumpPlan, aad_bump, benchmark_bump, fit_price_learner, linear_bump,
                            naive_aad, smart_bump)

BS_METHODS = ("benchmark", "linear", "smart", "aad", "naive-aad")


def basket_reports(spec: BasketSpec, m: int, seed: int, methods=BS_METHODS, *,
                   plan_sigma: float = 0.05, train: TrainConfig | None = None, hidden=(64, 64)):
    """Sensitivity reports on the basket testbed, keyed by method."""
    f = basket_payoff_fn(spec)
    rho0 = spec.rho0
    names = [f"spot[{i}]" for i in range(spec.d)] + [f"vol[{i}]" for i in range(spec.d)]
    plan = BumpPlan.single(2 * spec.d, plan_sigma)
    train = train or TrainConfig(epochs=30, batch_size=256, lr=3e-3, lr_final=3e-4)
    out = {}
    for method in methods:
        if method == "benchmark":
            out[method] = benchmark_bump(f, rho0, m, seed, names=names)
        elif method == "linear":
            out[method] = linear_bump(f, rho0, m, plan, seed, names=names)
        elif method == "smart":
            out[method] = smart_bump(f, rho0, m, seed, names=names)
        elif method == "aad":
            out[method] = aad_bump(f, rho0, m, plan, seed, hidden=hidden, train=train, names=names)
        elif method == "naive-aad":
            out[method] = naive_aad(fit_price_learner(f, rho0, m, plan, seed, hidden=hidden, train=train),
                                    rho0, names=names)
        else:
            raise ValueError(f"unknown method '{method}'")
    return out


def basket_rows(spec: BasketSpec, reports: dict) -> list[dict]:
    """One row per (method, Greek) against the closed form."""
    g = basket_call_analytic(spec)
    truth = np.r_[g.deltas, g.vegas]
    kinds = ["delta"] * spec.d + ["vega"] * spec.d
    rows = []
    for method, rep in reports.items():
        for k, name in enumerate(rep.names):
            ci = None if rep.ci is None else float(rep.ci[k])
            rows.append({"method": method, "greek": kinds[k], "parameter": name,
                         "analytic": float(truth[k]), "estimate": float(rep.estimate[k]),
                         "ci_halfwidth": ci, "rel_error": float(abs(rep.estimate[k] / truth[k] - 1)),
                         "covered": None if ci is None else bool(abs(rep.estimate[k] - truth[k]) <= ci)})
        if rep.gammas is not None:
            for k in range(spec.d):
                ci = float(rep.gamma_ci[k])
                rows.append({"method": method, "greek": "gamma", "parameter": rep.names[k],
                             "analytic": float(g.gammas[k]), "estimate": float(rep.gammas[k]),
                             "ci_halfwidth": ci, "rel_error": float(abs(rep.gammas[k] / g.gammas[k] - 1)),
                             "covered": bool(abs(rep.gammas[k] - g.gammas[k]) <= ci)})
    return rows


@dataclass
class Backtest:
    """Compression tables in and out of sample plus the hedge ratios used."""

    kind: str
    t: float
    in_sample: list
    out_of_sample: list
    deltas: dict
    info: dict = field(default_factory=dict)

    def ratio(self, method: str, sample: str = "oos", metric: str = "UPL_ratio") -> float:
        rows = self.out_of_sample if sample == "oos" else self.in_sample
        return next(r[metric] for r in rows if r["method"] == method)


def _hedge(data: HedgeData, methods, bump_delta, ec_cfg: EcConfig, extra: dict | None = None):
    deltas, info = {}, {}
    for method in methods:
        if method == "bump":
            if bump_delta is None:
                raise ValueError("bump hedge needs market sensitivities")
            deltas["bump"] = np.asarray(bump_delta, float)
        elif method == "ple":
            deltas["ple"] = ple_sensitivities(data)
        elif method == "ec":
            res = ec_sensitivities(data, ec_cfg)
            deltas["ec"] = res.delta
            info["ec_converged"] = res.converged
            info["ec_k"] = res.k
        elif extra is not None and method in extra:
            deltas[method] = extra[method]
        else:
            raise ValueError(f"hedging method '{method}' is not available here")
    return deltas, info


def runoff_backtest(lab: CvaLab, t: float, m: int, seeds: dict, *, bump_delta=None,
                    methods=("bump", "ple", "ec"), hidden=(128, 128),
                    train: TrainConfig = TrainConfig(epochs=100), ec_cfg: EcConfig = EcConfig(),
                    alpha: float = 0.95, pi0: float | None = None) -> Backtest:
    """Hedge the run-off loss dPi_t + C_t with time-0 instruments held to t."""
    if pi0 is None:
        pi0 = lab.price(m, seeds["price"])[0]
    cva_t, _, _ = learn_conditional_cva(lab, t, "risk", m, seeds["learn"], hidden=hidden, train=train)
    ins = runoff_sample(lab, t, m, seeds["runoff_in"], cva_t, pi0)
    oos = runoff_sample(lab, t, m, seeds["runoff_oos"], cva_t, pi0)
    deltas, info = _hedge(ins.data, methods, bump_delta, ec_cfg)
    info.update(pi0=pi0, default_rate_in=float(ins.X_t.any(axis=1).mean()),
                default_rate_oos=float(oos.X_t.any(axis=1).mean()))
    return Backtest("runoff", t, compression_report(deltas, ins.data, alpha),
                    compression_report(deltas, oos.data, alpha), deltas, info)


def runon_oos_data(lab: CvaLab, t: float, m: int, seed: int, predictor) -> HedgeData:
    """Fresh shocked-parameter scenarios priced by the learned CVA move."""
    rho = runon_scenarios(lab, t, m, seed)
    dZ = instrument_prices(ModelParams.from_vector(rho, lab.E, lab.C), lab.iset) - lab.z0
    return HedgeData(_centred_move(predictor, rho - lab.rho0), dZ)


def _centred_move(predictor, delta_rho):
    # dPi_(t) = Pi(varrho) - Pi(rho0), read off the learner at varrho - rho0 and at 0
    return predictor.predict(delta_rho) - predictor.predict(np.zeros((1, delta_rho.shape[1])))[0]


def runon_backtest(lab: CvaLab, t: float, m: int, seeds: dict, *, bump_delta=None,
                   methods=("bump", "ls", "ple", "ec"), hidden=(200,),
                   train: TrainConfig = TrainConfig(epochs=200, lr_final=1e-4),
                   ec_cfg: EcConfig = EcConfig(), alpha: float = 0.95) -> Backtest:
    """Hedge the run-on CVA move dPi_(t) with the time-0 instruments."""
    sample = runon_sample(lab, t, m, seeds["runon_in"])
    predictor, _ = learn_delta_cva_runon(lab, t, m, seeds["learn"], hidden=hidden, train=train,
                                         sample=sample)
    data = HedgeData(_centred_move(predictor, sample.delta_rho), sample.delta_Z)
    extra = {"ls": ls_sensitivities(sample.labels, sample.delta_Z)} if "ls" in methods else None
    deltas, info = _hedge(data, methods, bump_delta, ec_cfg, extra)
    oos = runon_oos_data(lab, t, m, seeds["runon_oos"], predictor)
    return Backtest("runon", t, compression_report(deltas, data, alpha),
                    compression_report(deltas, oos, alpha), deltas, info)
