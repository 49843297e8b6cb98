"""Named quantities a run can ask for: moments, workload, mgf values."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError

KINDS = ("first", "second", "workload", "mgf")


@dataclass(frozen=True)
class Target:
    kind: str
    i: Optional[int] = None
    i2: Optional[int] = None
    s: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"target kind must be one of {KINDS}")
        if self.kind == "mgf":
            if self.s is None:
                raise ValueError("mgf target needs s")
            object.__setattr__(self, "s", tuple(complex(v) if np.iscomplexobj(v) else float(v) for v in self.s))
        elif self.i is None or (self.kind == "second" and self.i2 is None):
            raise ValueError(f"{self.kind} target needs dimension indices")

    @property
    def label(self) -> str:
        if self.kind == "first":
            return f"M_{self.i}"
        if self.kind == "second":
            return f"M_{self.i}_{self.i2}"
        if self.kind == "workload":
            return f"W_{self.i}"
        return "psi[" + ",".join(_fmt(v) for v in self.s) + "]"

    @property
    def s_vector(self) -> np.ndarray:
        return np.array(self.s, dtype=complex if any(isinstance(v, complex) for v in self.s) else float)

    def to_json(self) -> dict:
        if self.kind == "mgf":
            return {"kind": "mgf", "s": [{"im": v.imag} if isinstance(v, complex) else v for v in self.s]}
        out = {"kind": self.kind, "i": self.i}
        if self.kind == "second":
            out["i2"] = self.i2
        return out


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.imag:g}j"
    return f"{v:g}"


def target_from_json(doc, k: int, pointer: str = "") -> Target:
    if not isinstance(doc, dict):
        raise ConfigError("target must be an object", pointer)
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown target kind {kind!r}; expected one of {KINDS}", f"{pointer}/kind")
    if kind == "mgf":
        s = doc.get("s")
        if not isinstance(s, list) or len(s) != k:
            raise ConfigError(f"mgf target needs s with {k} components", f"{pointer}/s")
        vals = []
        for n, v in enumerate(s):
            if isinstance(v, dict) and set(v) == {"im"} and _is_num(v["im"]):
                vals.append(complex(0.0, float(v["im"])))
            elif _is_num(v):
                vals.append(float(v))
            else:
                raise ConfigError("s components are numbers or {\"im\": number}", f"{pointer}/s/{n}")
        kinds = {isinstance(v, complex) for v in vals}
        if len(kinds) > 1:
            raise ConfigError("s must be all real or all imaginary", f"{pointer}/s")
        return Target("mgf", s=tuple(vals))
    names = ("i", "i2") if kind == "second" else ("i",)
    idx = []
    for name in names:
        v = doc.get(name)
        if isinstance(v, bool) or not isinstance(v, int) or not 1 <= v <= k:
            raise ConfigError(f"{name} must be an integer in 1..{k}", f"{pointer}/{name}")
        idx.append(v)
    return Target(kind, *idx)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)
