"""Command-line front end: output contract, manifests, exit codes and determinism."""

import csv
import json
import re

import numpy as np
import pytest

from xvasensi import cli
from xvasensi.config import DEFAULTS, ConfigError, config_hash, resolve, seeds

# a small desk keeps every command well under a few seconds
SMALL = ["grid.n=20", "portfolio.count=6", "portfolio.maturity_years=[1,3]", "experiment.m=512",
         "experiment.bump.m=128", "experiment.learner.epochs=3", "experiment.learner.hidden=[16]",
         "experiment.runon_learner.epochs=3", "experiment.runon_learner.hidden=[16]",
         "experiment.ec.epochs=5", "experiment.aad_learner.epochs=3"]


def run(tmp_path, *args, sets=SMALL, run_id="r"):
    argv = [*args, "--out", str(tmp_path), "--run-id", run_id]
    for s in sets:
        argv += ["--set", s]
    return cli.main(argv)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_zero_intensity_prices_zero_cva(tmp_path):
    # [DERIVED] gamma == 0 on every path: no default risk, xi = 0 exactly
    zero = [f"model.params.{k}[{c}]=0" for k in ("gamma0", "alpha", "nu") for c in (1, 2)]
    assert run(tmp_path, "cva", "price", sets=SMALL + zero) == 0
    out = rows(tmp_path / "r" / "price.csv")
    assert [r["estimator"] for r in out] == ["intensity", "default"]
    for r in out:
        assert float(r["estimate"]) == 0.0 and float(r["ci_halfwidth"]) == 0.0


def test_smart_equals_one_hot_linear_run(tmp_path):
    # [DERIVED] smart bumping is the linear estimator on the one-hot plan
    assert run(tmp_path, "cva", "bump-sensis", "--method", "smart", run_id="s") == 0
    assert run(tmp_path, "cva", "bump-sensis", "--method", "linear", run_id="l",
               sets=SMALL + ["experiment.bump.plan=one-hot"]) == 0
    s, lin = rows(tmp_path / "s" / "bump-sensis.csv"), rows(tmp_path / "l" / "bump-sensis.csv")
    assert [r["parameter_name"] for r in s] == [r["parameter_name"] for r in lin]
    assert [r["estimate"] for r in s] == [r["estimate"] for r in lin]
    assert [r["ci_halfwidth"] for r in s] == [r["ci_halfwidth"] for r in lin]


def test_runon_backtest_has_four_methods_plus_unhedged(tmp_path):
    assert run(tmp_path, "cva", "hedge-backtest", "--kind", "runon", "--method", "smart",
               sets=SMALL + ["experiment.t=0.5"]) == 0
    out = rows(tmp_path / "r" / "hedge-backtest.csv")
    for sample in ("in", "oos"):
        methods = [r["method"] for r in out if r["sample"] == sample]
        assert methods == ["unhedged", "bump", "ls", "ple", "ec"]
    assert all(float(r["UPL_ratio"]) == 1.0 for r in out if r["method"] == "unhedged")
    deltas = rows(tmp_path / "r" / "hedge-backtest-deltas.csv")
    assert list(deltas[0]) == ["instrument", "bump", "ls", "ple", "ec"]


def test_runoff_backtest_skips_ls(tmp_path, capsys):
    assert run(tmp_path, "cva", "hedge-backtest", "--kind", "runoff", "--method", "smart",
               sets=SMALL + ["experiment.t=0.5"]) == 0
    out = rows(tmp_path / "r" / "hedge-backtest.csv")
    assert [r["method"] for r in out if r["sample"] == "oos"] == ["unhedged", "bump", "ple", "ec"]
    assert "run-on only" in capsys.readouterr().err


def test_manifest_contents(tmp_path):
    assert run(tmp_path, "cva", "price", "--seed", "99") == 0
    man = json.loads((tmp_path / "r" / "manifest.json").read_text())
    e = man["commands"]["price"]
    assert e["config"]["seeds"]["base"] == 99
    assert e["config_hash"] == config_hash(e["config"])
    assert e["seeds"] == seeds(e["config"])
    assert set(e["outputs"]) == {"price.csv", "price-cashflows.csv"}
    assert all(re.fullmatch(r"[0-9a-f]{64}", v) for v in e["outputs"].values())
    assert "time" not in json.dumps(man).lower()
    # the resolved config is complete: every default section is present
    assert set(e["config"]) == set(DEFAULTS)


def test_csv_values_have_six_significant_digits(tmp_path):
    assert run(tmp_path, "cva", "price") == 0
    for r in rows(tmp_path / "r" / "price-cashflows.csv")[:200]:
        mant = r["xi"].split("e")[0].lstrip("-").replace(".", "").lstrip("0")
        assert len(mant) <= 6


def test_rerun_is_bit_identical_across_threads(tmp_path, capsys):
    assert run(tmp_path, "cva", "price", "--threads", "1") == 0
    assert run(tmp_path, "cva", "learn", "--threads", "1") == 0
    capsys.readouterr()
    code = cli.main(["rerun", str(tmp_path / "r" / "manifest.json"), "--out", str(tmp_path),
                     "--run-id", "again", "--threads", "3"])
    out = capsys.readouterr().out
    assert code == 0
    assert "DIFFERENT" not in out and out.count("identical") == 4


def test_rerun_detects_tampered_output(tmp_path, capsys):
    assert run(tmp_path, "cva", "price") == 0
    man_path = tmp_path / "r" / "manifest.json"
    man = json.loads(man_path.read_text())
    man["commands"]["price"]["outputs"]["price.csv"] = "0" * 64
    man_path.write_text(json.dumps(man))
    code = cli.main(["rerun", str(man_path), "--out", str(tmp_path), "--run-id", "again"])
    assert code == 3
    assert "DIFFERENT  price/price.csv" in capsys.readouterr().out


def test_report_sections(tmp_path, capsys):
    (tmp_path / "empty").mkdir()
    assert cli.main(["report", str(tmp_path / "empty")]) == 2
    assert run(tmp_path, "cva", "price") == 0
    capsys.readouterr()
    assert cli.main(["report", str(tmp_path / "r")]) == 0
    text = capsys.readouterr().out
    assert "intensity-based" in text
    assert "Compression" not in text and "Twin" not in text
    for cmd in (["cva", "bump-sensis", "--method", "smart"], ["cva", "market-sensis", "--method", "smart"],
                ["cva", "twin"], ["cva", "hedge-backtest", "--method", "smart"]):
        assert run(tmp_path, *cmd) == 0
    capsys.readouterr()
    assert cli.main(["report", str(tmp_path / "r")]) == 0
    text = capsys.readouterr().out
    for section in ("CVA", "Top model sensitivities", "Top market sensitivities",
                    "Twin validation", "Compression ratios"):
        assert section in text


def test_bs_bench_one_dimension_matches_black_scholes(tmp_path):
    # [DERIVED] d = 1 geometric basket is a vanilla call
    from scipy.stats import norm
    assert cli.main(["bs-bench", "--d", "1", "--m", "40000", "--method", "benchmark",
                     "--out", str(tmp_path), "--run-id", "b"]) == 0
    out = {r["greek"]: r for r in rows(tmp_path / "b" / "bs-bench.csv")}
    d1 = (0.5 * 0.2**2) / 0.2
    assert float(out["delta"]["analytic"]) == pytest.approx(norm.cdf(d1), rel=1e-5)
    assert float(out["vega"]["analytic"]) == pytest.approx(100 * norm.pdf(d1), rel=1e-5)
    assert out["delta"]["covered"] == "true"


def test_config_errors_exit_2(tmp_path, capsys):
    assert run(tmp_path, "cva", "price", sets=["no.such.key=1"]) == 2
    assert run(tmp_path, "cva", "price", sets=["experiment.m=many"]) == 2
    assert run(tmp_path, "cva", "price", sets=["model.params.sigma_r[0]=-0.01"]) == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: [unclosed\n")
    assert cli.main(["cva", "price", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, capsys):
    # notionals at the float limit overflow the exposures to inf
    assert run(tmp_path, "cva", "price",
               sets=SMALL + ["portfolio.notional_range=[1e308, 1.5e308]"]) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_yaml_config_and_overrides(tmp_path):
    f = tmp_path / "run.yaml"
    f.write_text("experiment:\n  m: 1000\nmodel:\n  params:\n    r0[0]: 0.03\n")
    cfg = resolve(f, ["experiment.t=0.5"], seed=5)
    assert cfg["experiment"]["m"] == 1000 and cfg["experiment"]["t"] == 0.5
    assert cfg["model"]["params"]["r0[0]"] == 0.03 and cfg["seeds"]["base"] == 5
    assert config_hash(cfg) != config_hash(resolve())
    with pytest.raises(ConfigError):
        resolve(overrides=["experiment=3"])


def test_seeds_are_distinct_and_stable():
    s = seeds(resolve())
    assert len(set(s.values())) == len(s)
    assert s == seeds(resolve())
    assert np.all([isinstance(v, int) for v in s.values()])


def test_replace_params_changes_desk_size(tmp_path):
    f = tmp_path / "one.yaml"
    f.write_text("model:\n  replace_params: true\n  params:\n"
                 "    r0[0]: 0.02\n    a[0]: 0.1\n    b[0]: 0.03\n    sigma_r[0]: 0.01\n"
                 "    gamma0[1]: 0.05\n    alpha[1]: 0.1\n    delta[1]: 0.05\n    nu[1]: 0.05\n")
    assert cli.main(["cva", "price", "--config", str(f), "--out", str(tmp_path), "--run-id", "one",
                     "--set", "experiment.m=256", "--set", "grid.n=10"]) == 0
    assert float(rows(tmp_path / "one" / "price.csv")[0]["estimate"]) > 0
