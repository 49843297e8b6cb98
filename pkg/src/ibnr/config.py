"""JSON run configuration: parsing with JSON-pointer errors and serialization.

Example::

    {
      "model": {
        "k": 1, "K": 1,
        "P": [[0.25, 0.75], [0.5, 0.5]],
        "service": [{"kind": "exponential", "rate": 1.0}],
        "interarrival": {"kind": "gamma", "shape": 1.0, "rate": 10.0},
        "delta": 0.0
      },
      "targets": [{"kind": "first", "i": 1}, {"kind": "second", "i": 1, "i2": 1}],
      "t": "limit",
      "sim": {"reps": 500, "seed": 1},
      "output": {"format": "csv"}
    }

A semi-Markov run replaces ``model`` by ``semi_markov`` with fields kappa,
P_Y, service_matrix, interarrival and delta.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .distributions import distribution_from_json
from .errors import ConfigError, IbnrError, StochasticityError
from .kernel import MARK_CONVENTIONS, ModelSpec
from .semimarkov import SemiMarkovSpec
from .statespace import ChainSpec, check_stochastic, enumerate_states, restricted_space
from .targets import target_from_json
from .transient import QuadratureConfig

COMMANDS = ("asymptotic", "transient", "mgf", "simulate", "compare", "embed-info")
SEMI_KINDS = ("first", "first_by_last", "second", "workload", "mgf")
MGF_FORMS = ("literal", "per-type", "by-last-switch")


@dataclass(frozen=True)
class SemiTarget:
    """Modulated quantity for a semi-Markov run."""

    kind: str
    z: Optional[complex] = None
    form: str = "literal"

    @property
    def label(self) -> str:
        if self.kind == "mgf":
            z = f"{self.z.imag:g}j" if isinstance(self.z, complex) else f"{self.z:g}"
            return f"mgf[{z}]" + ("" if self.form == "literal" else f"[{self.form}]")
        return {"first": "M1", "first_by_last": "M1_by_last", "second": "M2", "workload": "W"}[self.kind]

    def to_json(self) -> dict:
        if self.kind != "mgf":
            return {"kind": self.kind}
        z = {"im": self.z.imag} if isinstance(self.z, complex) else self.z
        return {"kind": "mgf", "z": z, "form": self.form}


@dataclass
class RunConfig:
    model: Optional[ModelSpec]
    semi: Optional[SemiMarkovSpec]
    command: Optional[str]
    targets: list
    t: Union[float, str, None]
    numeric: QuadratureConfig = field(default_factory=QuadratureConfig)
    reps: int = 500
    seed: int = 0
    fmt: str = "csv"
    path: Optional[str] = None
    tol: float = 1e-10
    method: str = "simulate"

    @property
    def is_semi(self) -> bool:
        return self.semi is not None


def _num(doc, key, pointer, *, positive=False, nonneg=False, required=True, default=None, integer=False):
    if key not in doc:
        if required:
            raise ConfigError(f"missing field {key!r}", f"{pointer}/{key}")
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or (integer and not isinstance(v, int)):
        raise ConfigError(f"{key} must be {'an integer' if integer else 'a number'}", f"{pointer}/{key}")
    if positive and not v > 0:
        raise ConfigError(f"{key} must be > 0", f"{pointer}/{key}")
    if nonneg and not v >= 0:
        raise ConfigError(f"{key} must be >= 0", f"{pointer}/{key}")
    return v


def _matrix(doc, key, pointer):
    if key not in doc:
        raise ConfigError(f"missing field {key!r}", f"{pointer}/{key}")
    M = doc[key]
    if not isinstance(M, list) or not M or not all(isinstance(r, list) for r in M):
        raise ConfigError("matrix must be a non-empty array of arrays", f"{pointer}/{key}")
    n = len(M)
    for a, row in enumerate(M):
        if len(row) != n:
            raise ConfigError(f"row {a} has {len(row)} entries, expected {n}", f"{pointer}/{key}/{a}")
        for b, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError("matrix entries must be numbers", f"{pointer}/{key}/{a}/{b}")
    arr = np.array(M, dtype=float)
    check_stochastic(arr, pointer=f"{pointer}/{key}")
    return arr


def _model(doc, pointer="/model") -> ModelSpec:
    if not isinstance(doc, dict):
        raise ConfigError("model must be an object", pointer)
    allowed = {"k", "K", "states", "P", "pi", "service", "interarrival", "delta", "marks", "state_cap"}
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"unexpected fields {sorted(extra)}", pointer)
    k = _num(doc, "k", pointer, positive=True, integer=True)
    K = _num(doc, "K", pointer, nonneg=True, integer=True)
    delta = _num(doc, "delta", pointer, nonneg=True)
    P = _matrix(doc, "P", pointer)
    try:
        if "states" in doc:
            space = restricted_space(k, K, doc["states"])
        else:
            space = enumerate_states(k, K, _num(doc, "state_cap", pointer, positive=True, integer=True,
                                                required=False, default=4096))
    except IbnrError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), f"{pointer}/states") from exc
    if P.shape[0] != space.size:
        raise ConfigError(f"P is {P.shape[0]}x{P.shape[0]} but the state space has {space.size} states", f"{pointer}/P")
    service = doc.get("service")
    if not isinstance(service, list) or len(service) != k:
        raise ConfigError(f"service must list {k} distributions", f"{pointer}/service")
    laws = [distribution_from_json(d, f"{pointer}/service/{n}") for n, d in enumerate(service)]
    if "interarrival" not in doc:
        raise ConfigError("missing field 'interarrival'", f"{pointer}/interarrival")
    tau = distribution_from_json(doc["interarrival"], f"{pointer}/interarrival")
    if tau.kind == "zero" or (tau.kind == "deterministic" and tau.value == 0):
        raise ConfigError("interarrival times must be positive", f"{pointer}/interarrival")
    marks = doc.get("marks", "arrival")
    if marks not in MARK_CONVENTIONS:
        raise ConfigError(f"marks must be one of {MARK_CONVENTIONS}", f"{pointer}/marks")
    pi = None
    if "pi" in doc:
        pi = np.array(doc["pi"], dtype=float)
    try:
        chain = ChainSpec(space, P, pi)
    except StochasticityError as exc:
        raise ConfigError(str(exc), f"{pointer}/pi" if pi is not None else f"{pointer}/P") from exc
    return ModelSpec(delta, chain, laws, tau, marks)


def _semi(doc, pointer="/semi_markov") -> SemiMarkovSpec:
    if not isinstance(doc, dict):
        raise ConfigError("semi_markov must be an object", pointer)
    extra = set(doc) - {"kappa", "P_Y", "pi_Y", "service_matrix", "interarrival", "delta"}
    if extra:
        raise ConfigError(f"unexpected fields {sorted(extra)}", pointer)
    kappa = _num(doc, "kappa", pointer, positive=True, integer=True)
    delta = _num(doc, "delta", pointer, nonneg=True)
    P = _matrix(doc, "P_Y", pointer)
    if P.shape[0] != kappa:
        raise ConfigError(f"P_Y must be {kappa}x{kappa}", f"{pointer}/P_Y")
    sm = doc.get("service_matrix")
    if not isinstance(sm, list) or len(sm) != kappa or any(not isinstance(r, list) or len(r) != kappa for r in sm):
        raise ConfigError(f"service_matrix must be {kappa}x{kappa}", f"{pointer}/service_matrix")
    laws = [[distribution_from_json(d, f"{pointer}/service_matrix/{a}/{b}") for b, d in enumerate(row)]
            for a, row in enumerate(sm)]
    if "interarrival" not in doc:
        raise ConfigError("missing field 'interarrival'", f"{pointer}/interarrival")
    tau = distribution_from_json(doc["interarrival"], f"{pointer}/interarrival")
    if tau.kind == "zero" or (tau.kind == "deterministic" and tau.value == 0):
        raise ConfigError("interarrival times must be positive", f"{pointer}/interarrival")
    pi = np.array(doc["pi_Y"], dtype=float) if "pi_Y" in doc else None
    try:
        return SemiMarkovSpec(kappa, P, laws, tau, delta, pi)
    except StochasticityError as exc:
        raise ConfigError(str(exc), f"{pointer}/pi_Y") from exc


def _semi_target(doc, pointer) -> SemiTarget:
    if not isinstance(doc, dict) or doc.get("kind") not in SEMI_KINDS:
        raise ConfigError(f"semi-Markov target kind must be one of {SEMI_KINDS}", f"{pointer}/kind")
    if doc["kind"] != "mgf":
        return SemiTarget(doc["kind"])
    z = doc.get("z")
    if isinstance(z, dict) and set(z) == {"im"} and isinstance(z["im"], (int, float)):
        zv = complex(0.0, float(z["im"]))
    elif isinstance(z, (int, float)) and not isinstance(z, bool):
        zv = float(z)
    else:
        raise ConfigError("z must be a number or {\"im\": number}", f"{pointer}/z")
    form = doc.get("form", "literal")
    if form not in MGF_FORMS:
        raise ConfigError(f"form must be one of {MGF_FORMS}", f"{pointer}/form")
    return SemiTarget("mgf", zv, form)


def parse_config(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "") from exc
    return config_from_dict(doc)


def config_from_dict(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object", "")
    allowed = {"model", "semi_markov", "command", "targets", "t", "numeric", "sim", "output", "tol", "method"}
    extra = set(doc) - allowed
    if extra:
        raise ConfigError(f"unexpected fields {sorted(extra)}", "")
    if ("model" in doc) == ("semi_markov" in doc):
        raise ConfigError("exactly one of 'model' and 'semi_markov' is required", "")
    model = _model(doc["model"]) if "model" in doc else None
    semi = _semi(doc["semi_markov"]) if "semi_markov" in doc else None
    command = doc.get("command")
    if command is not None and command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}", "/command")
    raw_targets = doc.get("targets", [])
    if not isinstance(raw_targets, list):
        raise ConfigError("targets must be an array", "/targets")
    if model is not None:
        targets = [target_from_json(d, model.k, f"/targets/{n}") for n, d in enumerate(raw_targets)]
    else:
        targets = [_semi_target(d, f"/targets/{n}") for n, d in enumerate(raw_targets)]
    t = doc.get("t")
    if t is not None and t != "limit":
        if isinstance(t, bool) or not isinstance(t, (int, float)) or t < 0:
            raise ConfigError("t must be a non-negative number or \"limit\"", "/t")
        t = float(t)
    numeric = doc.get("numeric", {})
    if not isinstance(numeric, dict):
        raise ConfigError("numeric must be an object", "/numeric")
    try:
        quad = QuadratureConfig(**numeric)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "/numeric") from exc
    sim = doc.get("sim", {})
    if not isinstance(sim, dict) or set(sim) - {"reps", "seed"}:
        raise ConfigError("sim accepts only reps and seed", "/sim")
    reps = _num(sim, "reps", "/sim", integer=True, required=False, default=500)
    if reps < 2:
        raise ConfigError("reps must be >= 2", "/sim/reps")
    seed = _num(sim, "seed", "/sim", integer=True, nonneg=True, required=False, default=0)
    out = doc.get("output", {})
    if not isinstance(out, dict) or set(out) - {"format", "path"}:
        raise ConfigError("output accepts only format and path", "/output")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format must be csv or json", "/output/format")
    tol = _num(doc, "tol", "", positive=True, required=False, default=1e-10)
    method = doc.get("method", "simulate")
    if method not in ("simulate", "direct"):
        raise ConfigError("method must be simulate or direct", "/method")
    cfg = RunConfig(model, semi, command, targets, t, quad, reps, seed, fmt, out.get("path"), tol, method)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    if cfg.command == "simulate" and cfg.t == "limit":
        raise ConfigError("t = \"limit\" cannot be simulated", "/t")
    if cfg.command == "embed-info" and not cfg.is_semi:
        raise ConfigError("embed-info needs a semi_markov configuration", "/semi_markov")


def _dist_json(d):
    return d.to_json()


def dump_config(cfg: RunConfig) -> dict:
    doc = {}
    if cfg.model is not None:
        m = cfg.model
        mdoc = {"k": m.k, "K": m.space.K}
        if m.space.restricted:
            mdoc["states"] = [list(x) for x in m.space.states]
        mdoc.update({
            "P": m.P.tolist(),
            "pi": m.pi.tolist(),
            "service": [_dist_json(d) for d in m.service],
            "interarrival": _dist_json(m.interarrival),
            "delta": m.delta,
            "marks": m.marks,
        })
        doc["model"] = mdoc
    else:
        s = cfg.semi
        doc["semi_markov"] = {
            "kappa": s.kappa,
            "P_Y": s.P_Y.tolist(),
            "pi_Y": s.pi_Y.tolist(),
            "service_matrix": [[_dist_json(d) for d in row] for row in s.service_matrix],
            "interarrival": _dist_json(s.interarrival),
            "delta": s.delta,
        }
    if cfg.command is not None:
        doc["command"] = cfg.command
    doc["targets"] = [tg.to_json() for tg in cfg.targets]
    if cfg.t is not None:
        doc["t"] = cfg.t
    q = cfg.numeric
    doc["numeric"] = {"method": q.method, "abs_tol": q.abs_tol, "rel_tol": q.rel_tol,
                      "max_subdivisions": q.max_subdivisions, "renewal_step": q.renewal_step}
    if q.ode_step is not None:
        doc["numeric"]["ode_step"] = q.ode_step
    doc["sim"] = {"reps": cfg.reps, "seed": cfg.seed}
    doc["output"] = {"format": cfg.fmt}
    if cfg.path is not None:
        doc["output"]["path"] = cfg.path
    doc["tol"] = cfg.tol
    doc["method"] = cfg.method
    return doc


def serialize(cfg: RunConfig) -> str:
    return json.dumps(dump_config(cfg), indent=2, sort_keys=True)
