"""Command-line front end: ``xvasensi [global options] COMMAND ...``.

Every command resolves a full run configuration, writes its CSV reports
to ``<out>/<run_id>/`` and records the configuration, seeds, output
checksums and headline metrics in ``<out>/<run_id>/manifest.json``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import config as C
from .cva import cashflow_sample, mean_ci
from .experiments import basket_reports, basket_rows, runoff_backtest, runon_backtest
from .jacobian import CalibrationError, jacobian_to_csv, market_sensis_to_csv
from .learners.mlp import ConstantPredictor
from .learners.pipelines import learn_conditional_cva, learn_delta_cva_runon, runon_sample, twin_sample
from .products.basket import BasketSpec
from .risk.measures import RiskReport, quadratic_proxy_risk
from .risk.scenarios import runoff_sample
from .risk.twin import twin_validate
from .sensitivities import (BumpPlan, aad_bump, benchmark_bump, fit_price_learner, linear_bump,
                            naive_aad, smart_bump)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
CVA_COMMANDS = ("price", "bump-sensis", "market-sensis", "learn", "twin", "risk-runoff",
                "risk-runon", "hedge-backtest")


class NumericalError(RuntimeError):
    """A computation produced non-finite results (exit code 3)."""


# ---------------------------------------------------------------- output helpers

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, (list, tuple)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def write_rows(path, rows, columns=None):
    columns = columns or list(rows[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _finite(name, *arrays):
    for a in arrays:
        if a is not None and not np.all(np.isfinite(np.asarray(a, float))):
            raise NumericalError(f"{name} produced non-finite values")


class Run:
    """Output directory of one command plus the metrics it reports."""

    def __init__(self, out_dir: Path, name: str):
        self.dir = out_dir
        self.name = name
        self.files: list[str] = []
        self.metrics: dict = {}
        self.dir.mkdir(parents=True, exist_ok=True)

    def path(self, suffix: str = "", ext: str = "csv") -> Path:
        fname = f"{self.name}{suffix}.{ext}"
        if fname not in self.files:
            self.files.append(fname)
        return self.dir / fname


# ---------------------------------------------------------------- shared steps

def _lab(cfg, threads):
    return C.build_lab(cfg, threads)


def model_sensis(lab, cfg, seeds, method=None):
    """Model sensitivities of CVA_0 with the configured bump method."""
    exp = cfg["experiment"]
    method = method or exp["sensis_method"]
    bump = exp["bump"]
    f, rho0, names, m = lab.payoff_fn, lab.rho0, lab.names, exp["m"]
    seed = seeds["bumps"]
    if bump["plan"] == "one-hot":
        plan = BumpPlan.one_hot(rho0.size, float(bump["rel"]))
    else:
        plan = lab.bump_plan()
    if method == "benchmark":
        rep = benchmark_bump(f, rho0, bump["m"], seed, rel_bump=float(bump["rel"]), names=names)
    elif method == "linear":
        rep = linear_bump(f, rho0, m, plan, seed, names=names)
    elif method == "smart":
        rep = smart_bump(f, rho0, m, seed, rel_bump=float(bump["rel"]), names=names)
    elif method == "aad":
        hidden, tc = C.train_config(cfg, "aad_learner", seeds["train"])
        rep = aad_bump(f, rho0, m, plan, seed, hidden=hidden, train=tc, names=names)
    else:
        hidden, tc = C.train_config(cfg, "aad_learner", seeds["train"])
        rep = naive_aad(fit_price_learner(f, rho0, m, plan, seed, hidden=hidden, train=tc), rho0,
                        names=names)
    _finite(f"{method} sensitivities", rep.estimate, rep.ci)
    return rep


def market_step(lab, cfg, seeds, method=None):
    rep = model_sensis(lab, cfg, seeds, method)
    jac = lab.jacobian(cfg["experiment"]["jacobian"])
    _finite("parameter Jacobian", jac)
    return rep, jac, lab.market_sensis(rep.estimate, jac)


def _top(names, values, k=10):
    order = np.argsort(-np.abs(values), kind="stable")[:k]
    return [[names[i], float(values[i])] for i in order]


def _conditional(lab, cfg, seeds):
    exp = cfg["experiment"]
    hidden, tc = C.train_config(cfg, "learner", seeds["train"])
    return learn_conditional_cva(lab, float(exp["t"]), exp["mode"], exp["m"], seeds["learn"],
                                 hidden=hidden, train=tc)


def _risk_rows(quantity, rep: RiskReport):
    return [{"quantity": quantity, "alpha": a, "VaR": v, "ES": e, "mean": rep.mean}
            for a, v, e in rep.rows()]


# ---------------------------------------------------------------- commands

def cmd_bs_bench(cfg, run: Run, seeds, threads):
    b = cfg["basket"]
    spec = C.basket_spec(cfg)
    methods = C.SENSIS_METHODS if b["method"] == "all" else (b["method"],)
    hidden, tc = C.train_config(cfg, "aad_learner", seeds["train"])
    reports = basket_reports(spec, b["m"], seeds["basket"], methods,
                             plan_sigma=float(b["plan_sigma"]), train=tc, hidden=hidden)
    rows = basket_rows(spec, reports)
    _finite("basket sensitivities", [r["estimate"] for r in rows])
    write_rows(run.path(), rows, ["method", "greek", "parameter", "analytic", "estimate",
                                  "ci_halfwidth", "rel_error", "covered"])
    summary = []
    for method in reports:
        for greek in ("delta", "vega", "gamma"):
            sel = [r for r in rows if r["method"] == method and r["greek"] == greek]
            if not sel:
                continue
            cov = [r["covered"] for r in sel if r["covered"] is not None]
            summary.append({"method": method, "greek": greek,
                            "max_rel_error": max(r["rel_error"] for r in sel),
                            "mean_rel_error": float(np.mean([r["rel_error"] for r in sel])),
                            "coverage": float(np.mean(cov)) if cov else None})
    write_rows(run.path("-summary"), summary)
    run.metrics["bs_summary"] = summary


def cmd_price(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    m = cfg["experiment"]["m"]
    ps = lab.simulate(lab.rho0, m, seeds["price"])
    cf = cashflow_sample(ps, lab.portfolio, mtm=lab.mtm(ps))
    _finite("CVA cash flows", cf.xi, cf.loss_C)
    est, ci = mean_ci(cf.xi)
    est_d, ci_d = mean_ci(cf.loss_C)
    _finite("CVA estimate", [est, ci, est_d, ci_d])
    rows = [{"estimator": "intensity", "estimate": est, "ci_halfwidth": ci, "m": m},
            {"estimator": "default", "estimate": est_d, "ci_halfwidth": ci_d, "m": m}]
    write_rows(run.path(), rows)
    cf.to_csv(run.path("-cashflows"))
    run.metrics.update(cva=est, cva_ci=ci, cva_default=est_d, cva_default_ci=ci_d, m=m)


def cmd_bump_sensis(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    rep = model_sensis(lab, cfg, seeds)
    rep.to_csv(run.path())
    if rep.gammas is not None:
        rep.gammas_to_csv(run.path("-gammas"))
    run.metrics.update(method=rep.method, top_sensitivities=_top(rep.names, rep.estimate))


def cmd_market_sensis(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    rep, jac, ms = market_step(lab, cfg, seeds)
    market_sensis_to_csv(ms, lab.iset.keys, run.path(), rep.method)
    jacobian_to_csv(jac, lab.free_names, lab.iset.names, run.path("-jacobian"))
    rep.to_csv(run.path("-model"))
    run.metrics.update(method=rep.method, top_market_sensitivities=_top(lab.iset.names, ms))


def cmd_learn(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    pred, feats, xi = _conditional(lab, cfg, seeds)
    fitted = pred.predict(feats)
    _finite("conditional CVA learner", fitted)
    exp = cfg["experiment"]
    row = {"t": float(exp["t"]), "mode": exp["mode"], "m": exp["m"],
           "features": feats.shape[1], "train_mse": float(np.mean((fitted - xi) ** 2)),
           "label_mean": float(xi.mean()), "prediction_mean": float(fitted.mean())}
    write_rows(run.path(), [row])
    pred.model.save(run.path("-model", "bin"))
    run.metrics.update(train_mse=row["train_mse"], label_mean=row["label_mean"])


def cmd_twin(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    exp = cfg["experiment"]
    pred, _, xi = _conditional(lab, cfg, seeds)
    feats, xi1, xi2, _ = twin_sample(lab, float(exp["t"]), exp["mode"], exp["m"], seeds["twin"])
    norm = abs(float(xi.mean())) or 1.0
    rows = []
    for name, phi in (("mlp", pred), ("constant", ConstantPredictor(float(xi.mean())))):
        rep = twin_validate(phi, xi1, xi2, norm, features=feats)
        _finite("twin statistic", rep.stat)
        rows.append({"predictor": name, **rep.as_row(), "m": rep.m})
    write_rows(run.path(), rows)
    run.metrics["twin"] = {r["predictor"]: {"err": r["twin_err"], "ub": r["twin_ub"]} for r in rows}


def cmd_risk_runoff(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    exp = cfg["experiment"]
    pi0 = lab.price(exp["m"], seeds["price"])[0]
    hidden, tc = C.train_config(cfg, "learner", seeds["train"])
    cva_t, _, _ = learn_conditional_cva(lab, float(exp["t"]), "risk", exp["m"], seeds["learn"],
                                        hidden=hidden, train=tc)
    s = runoff_sample(lab, float(exp["t"]), exp["m"], seeds["runoff_in"], cva_t, pi0)
    _finite("run-off loss", s.delta_pi, s.loss_C)
    levels = tuple(exp["alpha_levels"])
    rows = (_risk_rows("dPi", RiskReport.from_samples(s.delta_pi, levels))
            + _risk_rows("dPi+C", RiskReport.from_samples(s.delta_pi + s.loss_C, levels)))
    write_rows(run.path(), rows)
    run.metrics.update(pi0=pi0, risk=rows)


def cmd_risk_runon(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    exp = cfg["experiment"]
    t, m = float(exp["t"]), exp["m"]
    hidden, tc = C.train_config(cfg, "runon_learner", seeds["train"])
    sample = runon_sample(lab, t, m, seeds["runon_in"])
    pred, _ = learn_delta_cva_runon(lab, t, m, seeds["learn"], hidden=hidden, train=tc, sample=sample)
    d = sample.delta_rho
    move = pred.predict(d) - pred.predict(np.zeros((1, d.shape[1])))[0]
    _finite("run-on CVA move", move)
    levels = tuple(exp["alpha_levels"])
    rep = model_sensis(lab, cfg, seeds)
    rows = (_risk_rows("learned", RiskReport.from_samples(move, levels))
            + _risk_rows("sensis-linear", quadratic_proxy_risk(rep.estimate, d, levels=levels)))
    if rep.gammas is not None:
        rows += _risk_rows("sensis-quadratic",
                           quadratic_proxy_risk(rep.estimate, d, rep.gammas, levels=levels))
    write_rows(run.path(), rows)
    run.metrics["risk"] = rows


def cmd_hedge_backtest(cfg, run: Run, seeds, threads):
    lab = _lab(cfg, threads)
    exp = cfg["experiment"]
    kind, t, m = exp["hedge_kind"], float(exp["t"]), exp["m"]
    methods = list(exp["hedge_methods"])
    if kind == "runoff" and "ls" in methods:
        methods.remove("ls")
        run.metrics["skipped"] = ["ls (defined for run-on only)"]
        print("note: ls sensitivities are run-on only; skipped", file=sys.stderr)
    bump_delta = market_step(lab, cfg, seeds)[2] if "bump" in methods else None
    ec_cfg = C.ec_config(cfg, seeds["ec"])
    alpha = float(exp["hedge_alpha"])
    if kind == "runoff":
        hidden, tc = C.train_config(cfg, "learner", seeds["train"])
        bt = runoff_backtest(lab, t, m, seeds, bump_delta=bump_delta, methods=methods, hidden=hidden,
                             train=tc, ec_cfg=ec_cfg, alpha=alpha)
    else:
        hidden, tc = C.train_config(cfg, "runon_learner", seeds["train"])
        bt = runon_backtest(lab, t, m, seeds, bump_delta=bump_delta, methods=methods, hidden=hidden,
                            train=tc, ec_cfg=ec_cfg, alpha=alpha)
    rows = []
    for sample, table in (("in", bt.in_sample), ("oos", bt.out_of_sample)):
        for r in table:
            _finite(f"{r['method']} hedge", r["UPL"], r["EC"], r["c"])
            rows.append({"sample": sample, "kind": kind, "t": t, **r})
    write_rows(run.path(), rows, ["sample", "kind", "t", "method", "UPL", "EC", "c",
                                  "UPL_ratio", "EC_ratio", "c_ratio"])
    names = lab.iset.names
    write_rows(run.path("-deltas"),
               [{"instrument": n, **{k: float(v[j]) for k, v in bt.deltas.items()}}
                for j, n in enumerate(names)], ["instrument", *bt.deltas])
    run.metrics["compression"] = [{k: r[k] for k in ("sample", "method", "UPL_ratio", "EC_ratio",
                                                     "c_ratio")} for r in rows]
    run.metrics.update({k: v for k, v in bt.info.items() if not isinstance(v, np.ndarray)})


COMMANDS = {"bs-bench": cmd_bs_bench, "price": cmd_price, "bump-sensis": cmd_bump_sensis,
            "market-sensis": cmd_market_sensis, "learn": cmd_learn, "twin": cmd_twin,
            "risk-runoff": cmd_risk_runoff, "risk-runon": cmd_risk_runon,
            "hedge-backtest": cmd_hedge_backtest}


# ---------------------------------------------------------------- manifest

def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def load_manifest(run_dir) -> dict:
    path = Path(run_dir)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        raise C.ConfigError(f"no manifest found at {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise C.ConfigError(f"unreadable manifest {path}: {exc}") from None


def execute(command: str, cfg: dict, out_dir: Path, threads: int = 1) -> dict:
    """Run one command with a resolved config; returns its manifest entry."""
    seeds = C.seeds(cfg)
    run = Run(out_dir, command)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        COMMANDS[command](cfg, run, seeds, threads)
    entry = {"command": command, "config": cfg, "config_hash": C.config_hash(cfg), "seeds": seeds,
             "threads": threads, "outputs": {f: sha256_file(out_dir / f) for f in run.files},
             "metrics": _jsonable(run.metrics)}
    mpath = out_dir / "manifest.json"
    manifest = load_manifest(out_dir) if mpath.is_file() else {}
    manifest.setdefault("package", "xvasensi")
    manifest["version"] = __version__
    manifest.setdefault("commands", {})[command] = entry
    mpath.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return entry


# ---------------------------------------------------------------- report

def report(run_dir, stream=None) -> None:
    stream = stream or sys.stdout
    manifest = load_manifest(run_dir)
    cmds = manifest.get("commands", {})
    if not cmds:
        raise C.ConfigError("manifest lists no commands")

    def out(line=""):
        print(line, file=stream)

    out(f"run {Path(run_dir).resolve().name}  (xvasensi {manifest.get('version', '?')})")
    for name, e in sorted(cmds.items()):
        out(f"  {name}: config {e['config_hash'][:12]}, seed base {e['config']['seeds']['base']}")
    if "price" in cmds:
        mt = cmds["price"]["metrics"]
        out("\nCVA")
        out(f"  intensity-based  {mt['cva']:.6g} +/- {mt['cva_ci']:.3g}  (m={mt['m']})")
        out(f"  default-based    {mt['cva_default']:.6g} +/- {mt['cva_default_ci']:.3g}")
    for name, key, title in (("bump-sensis", "top_sensitivities", "Top model sensitivities"),
                             ("market-sensis", "top_market_sensitivities", "Top market sensitivities")):
        if name in cmds:
            mt = cmds[name]["metrics"]
            out(f"\n{title} ({mt['method']})")
            for n, v in mt[key]:
                out(f"  {n:<24s} {v: .6g}")
    if "bs-bench" in cmds:
        out("\nBasket benchmark (max relative error, CI coverage)")
        for r in cmds["bs-bench"]["metrics"]["bs_summary"]:
            cov = "" if r["coverage"] is None else f"  coverage {r['coverage']:.0%}"
            out(f"  {r['method']:<10s} {r['greek']:<6s} {r['max_rel_error']:.3g}{cov}")
    if "learn" in cmds:
        mt = cmds["learn"]["metrics"]
        out(f"\nLearner: training MSE {mt['train_mse']:.6g} (label mean {mt['label_mean']:.6g})")
    if "twin" in cmds:
        out("\nTwin validation (relative error, upper bound)")
        for name, v in cmds["twin"]["metrics"]["twin"].items():
            err = v["err"] if isinstance(v["err"], str) else f"{v['err']:.4g}"
            out(f"  {name:<10s} err {err}  ub {v['ub']:.4g}")
    for name in ("risk-runoff", "risk-runon"):
        if name in cmds:
            out(f"\n{name} risk (alpha, VaR, ES)")
            for r in cmds[name]["metrics"]["risk"]:
                out(f"  {r['quantity']:<16s} {r['alpha']:.3f}  {r['VaR']: .6g}  {r['ES']: .6g}")
    if "hedge-backtest" in cmds:
        e = cmds["hedge-backtest"]
        out(f"\nCompression ratios ({e['config']['experiment']['hedge_kind']}, "
            f"t={e['config']['experiment']['t']})")
        out(f"  {'sample':<6s} {'method':<10s} {'UPL':>8s} {'EC':>8s} {'c':>8s}")
        for r in e["metrics"]["compression"]:
            out(f"  {r['sample']:<6s} {r['method']:<10s} {r['UPL_ratio']:8.3f} {r['EC_ratio']:8.3f} "
                f"{r['c_ratio']:8.3f}")


# ---------------------------------------------------------------- rerun

def rerun(manifest_path, out_dir: Path, threads: int, stream=None) -> bool:
    """Re-execute every command of a manifest; True if all outputs match bit for bit."""
    stream = stream or sys.stdout
    manifest = load_manifest(manifest_path)
    ok = True
    for name, e in sorted(manifest.get("commands", {}).items()):
        cfg = e["config"]
        C.validate(cfg)
        if C.config_hash(cfg) != e["config_hash"]:
            raise C.ConfigError(f"config hash mismatch for '{name}'")
        new = execute(name, cfg, out_dir, threads)
        for f, digest in sorted(e["outputs"].items()):
            same = new["outputs"].get(f) == digest
            ok &= same
            print(f"{'identical' if same else 'DIFFERENT'}  {name}/{f}", file=stream)
    return ok


# ---------------------------------------------------------------- argument parsing

def _globals(defaults: bool) -> argparse.ArgumentParser:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--config", default=d(None), help="YAML run configuration")
    g.add_argument("--set", dest="overrides", action="append", default=d([]), metavar="KEY=VALUE",
                   help="override one config entry (repeatable)")
    g.add_argument("--out", default=d("runs"), help="output root directory")
    g.add_argument("--seed", type=int, default=d(None), help="override seeds.base")
    g.add_argument("--threads", type=int, default=d(1), help="worker threads for path simulation")
    g.add_argument("--run-id", default=d(None), help="run directory name under --out")
    return g


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xvasensi", parents=[_globals(True)],
                                     description="CVA sensitivities, risk and hedging lab")
    parser.add_argument("--version", action="version", version=f"xvasensi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    g = _globals(False)

    bs = sub.add_parser("bs-bench", parents=[g], help="bump Greeks on the geometric basket testbed")
    bs.add_argument("--d", type=int, help="basket dimension (uses the default basket of that size)")
    bs.add_argument("--m", type=int, help="number of paths")
    bs.add_argument("--method", choices=C.SENSIS_METHODS + ("all",))

    cva = sub.add_parser("cva", help="desk-scale CVA computations")
    csub = cva.add_subparsers(dest="cva_command", required=True)
    for name in CVA_COMMANDS:
        p = csub.add_parser(name, parents=[g])
        p.add_argument("--m", type=int, help="number of paths")
        p.add_argument("--t", type=float, help="horizon in years")
        if name in ("bump-sensis", "market-sensis", "risk-runon", "hedge-backtest"):
            p.add_argument("--method", choices=C.SENSIS_METHODS, help="bump sensitivity method")
        if name in ("learn", "twin"):
            p.add_argument("--mode", choices=("baseline", "risk"))
        if name == "hedge-backtest":
            p.add_argument("--kind", choices=("runoff", "runon"))
            p.add_argument("--methods", help="comma-separated subset of bump,ls,ple,ec")

    rp = sub.add_parser("report", parents=[g], help="summarize a run directory")
    rp.add_argument("run_dir")
    rr = sub.add_parser("rerun", parents=[g], help="re-execute a manifest and compare outputs")
    rr.add_argument("manifest")
    return parser


def _flag_overrides(args) -> list[str]:
    over = []
    if args.command == "bs-bench":
        if args.d is not None:
            spec = BasketSpec.default(args.d)
            over += [f"basket.spots={list(spec.spots)}", f"basket.vols={list(spec.vols)}"]
        if args.m is not None:
            over.append(f"basket.m={args.m}")
        if args.method is not None:
            over.append(f"basket.method={args.method}")
        return over
    for flag, key in (("m", "experiment.m"), ("t", "experiment.t"), ("mode", "experiment.mode"),
                      ("method", "experiment.sensis_method"), ("kind", "experiment.hedge_kind")):
        v = getattr(args, flag, None)
        if v is not None:
            over.append(f"{key}={v}")
    if getattr(args, "methods", None):
        over.append(f"experiment.hedge_methods=[{args.methods}]")
    return over


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise C.ConfigError("--threads must be >= 1")
        if args.command == "report":
            report(args.run_dir)
            return EXIT_OK
        out_root = Path(args.out)
        if args.command == "rerun":
            src = Path(args.manifest).resolve()
            run_id = args.run_id or (src if src.is_dir() else src.parent).name + "-rerun"
            ok = rerun(args.manifest, out_root / run_id, args.threads)
            if not ok:
                print("error: re-run outputs differ from the manifest checksums", file=sys.stderr)
                return EXIT_NUMERICAL
            return EXIT_OK
        command = args.command if args.command != "cva" else args.cva_command
        cfg = C.resolve(args.config, [*args.overrides, *_flag_overrides(args)], args.seed)
        run_id = args.run_id or f"{command}-{C.config_hash(cfg)[:12]}"
        entry = execute(command, cfg, out_root / run_id, args.threads)
        print(f"{command}: wrote {', '.join(entry['outputs'])} to {out_root / run_id}")
        return EXIT_OK
    except (NumericalError, CalibrationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # ConfigError and argument checks raised by the library (e.g. too few paths)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
