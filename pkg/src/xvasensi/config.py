"""Run configuration: YAML file plus command-line overrides, fully resolved.

A resolved config is a plain nested dict. Its canonical JSON form is
hashed into the manifest, and every random seed a command uses is derived
from ``seeds.base`` and recorded there too.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import numpy as np
import yaml

from .engine.params import ModelParams
from .engine.rng import derive_seed
from .engine.simulate import SimGrid
from .lab import DESK_PARAMS, CvaLab, LabConfig
from .learners.mlp import TrainConfig
from .products.basket import BasketSpec
from .products.swaps import PortfolioSpec
from .risk.hedging import EcConfig


class ConfigError(ValueError):
    """Invalid configuration (mapped to exit code 2 by the CLI)."""


DEFAULTS = {
    # params given in a file update the desk values key by key, unless
    # replace_params is true (needed to change the number of economies or clients)
    "model": {"params": dict(DESK_PARAMS), "replace_params": False},
    "grid": {"n": 100, "h": 0.1, "substeps": 5},
    "portfolio": {"count": 50, "seed": 7, "maturity_years": [1, 10],
                  "notional_range": [1e4, 1e5], "freqs": [1, 2], "file": None},
    "instruments": {"lgd": 0.6},
    "experiment": {
        "t": 0.1,
        "m": 16384,
        "mode": "risk",
        "sensis_method": "benchmark",
        "bump": {"rel": 0.01, "vol_sigma": 0.05, "other_sigma": 0.01, "m": 8192,
                 "plan": "families"},
        "jacobian": "gauss-newton",
        "learner": {"hidden": [128, 128], "epochs": 100, "batch_size": 256, "lr": 1e-3,
                    "lr_final": None, "ridge": 1e-6},
        "runon_learner": {"hidden": [200], "epochs": 200, "batch_size": 256, "lr": 1e-3,
                          "lr_final": 1e-4, "ridge": 1e-6},
        "aad_learner": {"hidden": [64, 64], "epochs": 100, "batch_size": 256, "lr": 1e-3,
                        "lr_final": None, "ridge": 1e-6},
        "alpha_levels": [0.95, 0.975, 0.99],
        "hedge_alpha": 0.95,
        "hedge_kind": "runon",
        "hedge_methods": ["bump", "ls", "ple", "ec"],
        "ec": {"epochs": 500, "batch_size": 1024, "lr": 1e-2, "lr_final": 1e-4},
    },
    "basket": {"spots": [90.0, 100.0, 110.0], "vols": [0.2, 0.2, 0.2], "strike": 100.0,
               "maturity": 1.0, "rate": 0.0, "m": 100000, "method": "all",
               "plan_sigma": 0.05},
    "seeds": {"base": 2024},
}

# purposes whose seeds are derived from seeds.base, in a fixed order
SEED_PURPOSES = ("price", "bumps", "learn", "twin", "runoff_in", "runoff_oos", "runon_in",
                 "runon_oos", "basket", "train", "ec")
SENSIS_METHODS = ("benchmark", "linear", "smart", "aad", "naive-aad")
HEDGE_METHODS = ("bump", "ls", "ple", "ec")
_INT_KEYS = {"n", "substeps", "count", "seed", "m", "epochs", "batch_size", "base"}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        key = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key '{key}'")
        if isinstance(base[k], dict) and k != "params":
            if not isinstance(v, dict):
                raise ConfigError(f"config key '{key}' must be a mapping")
            out[k] = _merge(base[k], v, key + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def apply_override(cfg: dict, assignment: str) -> None:
    """Apply one ``dotted.key=value`` override; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override '{assignment}' is not of the form key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value of '{key}': {exc}") from None
    parts = key.strip().split(".")
    node = cfg
    for i, p in enumerate(parts[:-1]):
        if not isinstance(node, dict) or p not in node:
            raise ConfigError(f"unknown config key '{'.'.join(parts[: i + 1])}'")
        node = node[p]
    last = parts[-1]
    in_params = len(parts) >= 2 and parts[-2] == "params"
    if not isinstance(node, dict) or (last not in node and not in_params):
        raise ConfigError(f"unknown config key '{key}'")
    if isinstance(node.get(last), dict):
        raise ConfigError(f"config key '{key}' is a section; set one of its fields")
    node[last] = value


def resolve(path=None, overrides=(), seed: int | None = None) -> dict:
    """Defaults, then the YAML file, then ``--set`` overrides, then ``--seed``."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        replace = isinstance(data.get("model"), dict) and data["model"].get("replace_params")
        params = data.get("model", {}).get("params") if isinstance(data.get("model"), dict) else None
        cfg = _merge(cfg, data)
        if isinstance(params, dict) and not replace:
            cfg["model"]["params"] = {**DEFAULTS["model"]["params"], **params}
    for o in overrides:
        apply_override(cfg, o)
    if seed is not None:
        cfg["seeds"]["base"] = int(seed)
    validate(cfg)
    return cfg


def _check_ints(node, path=""):
    for k, v in node.items():
        if isinstance(v, dict) and k != "params":
            _check_ints(v, f"{path}{k}.")
        elif k in _INT_KEYS and v is not None:
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) and not (
                    isinstance(v, float) and v.is_integer()):
                raise ConfigError(f"'{path}{k}' must be an integer")
            node[k] = int(v)


def validate(cfg: dict) -> None:
    _check_ints(cfg)
    try:
        params = model_params(cfg)
        params.validate()
        grid(cfg)
        basket_spec(cfg)
        for name in ("learner", "runon_learner", "aad_learner"):
            train_config(cfg, name)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc).strip("'\"")) from None
    exp = cfg["experiment"]
    if exp["m"] < 2:
        raise ConfigError("experiment.m must be >= 2")
    if exp["mode"] not in ("baseline", "risk"):
        raise ConfigError("experiment.mode must be 'baseline' or 'risk'")
    if exp["hedge_kind"] not in ("runoff", "runon"):
        raise ConfigError("experiment.hedge_kind must be 'runoff' or 'runon'")
    if not all(0 < a < 1 for a in exp["alpha_levels"]) or not 0 < exp["hedge_alpha"] < 1:
        raise ConfigError("alpha levels must lie in (0, 1)")
    if exp["sensis_method"] not in SENSIS_METHODS:
        raise ConfigError(f"experiment.sensis_method must be one of {', '.join(SENSIS_METHODS)}")
    if cfg["basket"]["method"] not in SENSIS_METHODS + ("all",):
        raise ConfigError("basket.method must be a sensitivity method or 'all'")
    bad = set(exp["hedge_methods"]) - set(HEDGE_METHODS)
    if bad or not exp["hedge_methods"]:
        raise ConfigError(f"experiment.hedge_methods must be drawn from {', '.join(HEDGE_METHODS)}")
    if exp["bump"]["plan"] not in ("families", "one-hot"):
        raise ConfigError("experiment.bump.plan must be 'families' or 'one-hot'")
    g = grid(cfg)
    if exp["t"] < 0 or exp["t"] > g.T:
        raise ConfigError("experiment.t must lie in [0, T]")


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def seeds(cfg: dict) -> dict:
    base = cfg["seeds"]["base"]
    return {name: derive_seed(base, k) for k, name in enumerate(SEED_PURPOSES)}


def model_params(cfg: dict) -> ModelParams:
    mapping = cfg["model"]["params"]
    if not isinstance(mapping, dict):
        raise ConfigError("model.params must be a mapping")
    return ModelParams.from_mapping({str(k): float(v) for k, v in mapping.items()})


def grid(cfg: dict) -> SimGrid:
    g = cfg["grid"]
    return SimGrid(n=g["n"], h=float(g["h"]), substeps=g["substeps"])


def train_config(cfg: dict, section: str, seed: int = 0) -> tuple[tuple, TrainConfig]:
    s = cfg["experiment"][section]
    tc = TrainConfig(epochs=s["epochs"], batch_size=s["batch_size"], lr=float(s["lr"]),
                     ridge=float(s["ridge"]),
                     lr_final=None if s["lr_final"] is None else float(s["lr_final"]), seed=seed)
    return tuple(int(h) for h in s["hidden"]), tc


def ec_config(cfg: dict, seed: int = 0) -> EcConfig:
    s = cfg["experiment"]["ec"]
    return EcConfig(alpha=float(cfg["experiment"]["hedge_alpha"]), epochs=int(s["epochs"]),
                    batch_size=int(s["batch_size"]), lr=float(s["lr"]),
                    lr_final=float(s["lr_final"]), seed=seed)


def basket_spec(cfg: dict) -> BasketSpec:
    b = cfg["basket"]
    return BasketSpec(spots=tuple(float(x) for x in b["spots"]), vols=tuple(float(x) for x in b["vols"]),
                      rate=float(b["rate"]), strike=float(b["strike"]), maturity=float(b["maturity"]))


def build_lab(cfg: dict, threads: int = 1) -> CvaLab:
    from .products.swaps import Portfolio

    pf = cfg["portfolio"]
    bump = cfg["experiment"]["bump"]
    spec = PortfolioSpec(maturity_years=tuple(int(x) for x in pf["maturity_years"]),
                         notional_range=tuple(float(x) for x in pf["notional_range"]),
                         freqs=tuple(int(x) for x in pf["freqs"]))
    lab_cfg = LabConfig(params=model_params(cfg), grid=grid(cfg), n_swaps=pf["count"],
                        portfolio_seed=pf["seed"], portfolio_spec=spec,
                        lgd=float(cfg["instruments"]["lgd"]), threads=threads,
                        vol_sigma=float(bump["vol_sigma"]), other_sigma=float(bump["other_sigma"]))
    portfolio = None
    if pf["file"]:
        try:
            portfolio = Portfolio.from_csv(pf["file"])
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot load portfolio file: {exc}") from None
    try:
        return CvaLab(lab_cfg, portfolio)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
