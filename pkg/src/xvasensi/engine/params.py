"""Model parameters and the flat parameter vector layout.

The vector is ordered ``rho = (y, eps)``. The initial conditions ``y`` are
r0 per economy, fx0 per foreign economy and gamma0 per counterparty. The
exogenous ``eps`` are a, b, sigma_r, sigma_fx, alpha, delta, nu. Fields
may be 1-d (one parameter set) or 2-d with a leading path axis (one set
per path); all downstream code broadcasts over that axis.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, fields
from functools import cached_property

import numpy as np

# (field, block) in vector order; block is "E", "F" (foreign economies) or "C"
_Y_FIELDS = (("r0", "E"), ("fx0", "F"), ("gamma0", "C"))
_EPS_FIELDS = (
    ("a", "E"), ("b", "E"), ("sigma_r", "E"), ("sigma_fx", "F"),
    ("alpha", "C"), ("delta", "C"), ("nu", "C"),
)
FIELD_ORDER = _Y_FIELDS + _EPS_FIELDS
VOL_FIELDS = ("sigma_r", "sigma_fx", "nu")
POSITIVE_FIELDS = ("gamma0", "nu", "sigma_r", "sigma_fx", "delta")

_KEY_RE = re.compile(r"^([a-z_0-9]+)\[(\d+)\]$")


@dataclass(frozen=True)
class ParamLayout:
    """Index bookkeeping for a model with E economies and C counterparties.

    Foreign economies are labelled 1..E-1 and counterparties 1..C in
    parameter names; the reference economy is 0.
    """

    E: int
    C: int

    def __post_init__(self):
        if self.E < 1 or self.C < 0:
            raise ValueError("need E >= 1 and C >= 0")

    def block_size(self, block: str) -> int:
        return {"E": self.E, "F": self.E - 1, "C": self.C}[block]

    def labels(self, block: str) -> range:
        return {"E": range(self.E), "F": range(1, self.E), "C": range(1, self.C + 1)}[block]

    @cached_property
    def slices(self) -> dict[str, slice]:
        out, k = {}, 0
        for name, block in FIELD_ORDER:
            n = self.block_size(block)
            out[name] = slice(k, k + n)
            k += n
        return out

    @property
    def p(self) -> int:
        return self.slices["nu"].stop

    @property
    def n_y(self) -> int:
        return self.slices["gamma0"].stop

    @cached_property
    def names(self) -> list[str]:
        return [f"{name}[{i}]" for name, block in FIELD_ORDER for i in self.labels(block)]

    @cached_property
    def field_of(self) -> np.ndarray:
        return np.array([n.split("[")[0] for n in self.names])

    @property
    def y_mask(self) -> np.ndarray:
        mask = np.zeros(self.p, bool)
        mask[: self.n_y] = True
        return mask

    @property
    def vol_mask(self) -> np.ndarray:
        return np.isin(self.field_of, VOL_FIELDS)

    @property
    def free_mask(self) -> np.ndarray:
        """Parameters left free in calibration (volatilities are frozen)."""
        return ~self.vol_mask

    def index(self, name: str) -> int:
        return self.names.index(name)

    def groups_by_field(self) -> list[np.ndarray]:
        return [np.arange(self.p)[s] for s in self.slices.values() if s.stop > s.start]


@dataclass(frozen=True)
class ModelParams:
    r0: np.ndarray
    a: np.ndarray
    b: np.ndarray
    sigma_r: np.ndarray
    fx0: np.ndarray
    sigma_fx: np.ndarray
    gamma0: np.ndarray
    alpha: np.ndarray
    delta: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, np.asarray(getattr(self, f.name), dtype=float))
        E, C = self.r0.shape[-1], self.gamma0.shape[-1]
        lay = ParamLayout(E, C)
        for name, block in FIELD_ORDER:
            if getattr(self, name).shape[-1] != lay.block_size(block):
                raise ValueError(f"{name} has {getattr(self, name).shape[-1]} entries, "
                                 f"expected {lay.block_size(block)}")

    @property
    def layout(self) -> ParamLayout:
        return ParamLayout(self.r0.shape[-1], self.gamma0.shape[-1])

    @property
    def E(self) -> int:
        return self.r0.shape[-1]

    @property
    def C(self) -> int:
        return self.gamma0.shape[-1]

    @property
    def batched(self) -> bool:
        return self.r0.ndim == 2

    @property
    def n_batch(self) -> int | None:
        return self.r0.shape[0] if self.batched else None

    def to_vector(self) -> np.ndarray:
        return np.concatenate([getattr(self, name) for name, _ in FIELD_ORDER], axis=-1)

    @classmethod
    def from_vector(cls, vec, E: int, C: int) -> "ModelParams":
        vec = np.asarray(vec, dtype=float)
        lay = ParamLayout(E, C)
        if vec.shape[-1] != lay.p:
            raise ValueError(f"vector has {vec.shape[-1]} entries, layout needs {lay.p}")
        return cls(**{name: vec[..., s] for name, s in lay.slices.items()})

    def to_mapping(self) -> dict[str, float]:
        if self.batched:
            raise ValueError("mapping export needs an unbatched parameter set")
        return dict(zip(self.layout.names, self.to_vector().tolist()))

    @classmethod
    def from_mapping(cls, mapping: dict, E: int | None = None, C: int | None = None) -> "ModelParams":
        """Build from keys like ``r0[0]`` or ``gamma0[2]``; all keys are required."""
        parsed: dict[tuple[str, int], float] = {}
        for key, value in mapping.items():
            m = _KEY_RE.match(str(key).strip())
            if not m:
                raise KeyError(f"malformed parameter key {key!r}")
            parsed[(m.group(1), int(m.group(2)))] = float(value)
        if E is None:
            E = 1 + max(i for (n, i) in parsed if n == "r0")
        if C is None:
            C = max((i for (n, i) in parsed if n == "gamma0"), default=0)
        lay = ParamLayout(E, C)
        known = set(lay.names)
        unknown = {f"{n}[{i}]" for n, i in parsed} - known
        if unknown:
            raise KeyError(f"unknown parameter keys: {sorted(unknown)}")
        missing = [k for k in lay.names if tuple(_split(k)) not in parsed]
        if missing:
            raise KeyError(f"missing parameter keys: {missing}")
        return cls.from_vector([parsed[_split(k)] for k in lay.names], E, C)

    def replace_vector(self, vec) -> "ModelParams":
        return ModelParams.from_vector(vec, self.E, self.C)

    def row(self, j: int) -> "ModelParams":
        if not self.batched:
            return self
        return ModelParams(**{f.name: getattr(self, f.name)[j] for f in fields(self)})

    def validate(self) -> list[str]:
        """Raise on hard violations and return soft warnings.

        Negative values of the positive fields are errors. Exact zeros are
        degenerate limits (no vol, no default risk) and only produce a note.
        """
        for f in fields(self):
            if not np.all(np.isfinite(getattr(self, f.name))):
                raise ValueError(f"{f.name} contains non-finite values")
        notes = []
        for name in POSITIVE_FIELDS:
            v = getattr(self, name)
            if np.any(v < 0):
                raise ValueError(f"{name} must be strictly positive")
            if np.any(v == 0):
                notes.append(f"{name} has zero entries (degenerate model)")
        feller = 2 * self.delta * self.alpha >= self.nu**2
        if not np.all(feller):
            notes.append("Feller condition 2*delta*alpha >= nu^2 violated")
            warnings.warn(notes[-1], stacklevel=2)
        return notes


def _split(key: str) -> tuple[str, int]:
    m = _KEY_RE.match(key)
    return m.group(1), int(m.group(2))
