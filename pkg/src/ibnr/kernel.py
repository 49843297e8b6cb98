"""Model description and the mgf kernel matrices.

pi_tilde(s, r) is the diagonal matrix of per-state transforms of one
arrival's residual discounted contribution at age r; q_tilde = pi_tilde P'.

Mark conventions
----------------
``marks="arrival"`` (default): the i-th arrival carries the chain state
X_i, so the conditioning state X_0 is not a batch and the terminal state is
the last arrival's batch.  One arrival acts on joint matrices as
``P @ pi_tilde`` (= q_tilde').

``marks="lagged"``: the i-th arrival carries X_{i-1}; the conditioning
state is the first batch and the terminal state belongs to the next,
not yet arrived, batch.  One arrival acts as ``pi_tilde @ P``.  The
published closed-form moment limits (Delta_i P orderings) are exact for
this convention.

Both conventions produce the same unconditional law of Z(t); they differ
only jointly with the initial and terminal chain states.
"""
from __future__ import annotations

from dataclasses import dataclass


import numpy as np

from .distributions import Distribution, Zero, truncated_discount_pair
from .errors import DimensionError, DomainError, EvaluationDomainError
from .statespace import ChainSpec, delta_matrix

MARK_CONVENTIONS = ("arrival", "lagged")


@dataclass(frozen=True)
class ModelSpec:
    delta: float
    chain: ChainSpec
    service: tuple
    interarrival: Distribution
    marks: str = "arrival"

    def __post_init__(self):
        object.__setattr__(self, "service", tuple(self.service))
        object.__setattr__(self, "delta", float(self.delta))
        if not self.delta >= 0:
            raise DomainError("discount rate delta must be >= 0")
        if len(self.service) != self.chain.space.k:
            raise DimensionError(f"{len(self.service)} service laws for k = {self.chain.space.k} dimensions")
        if isinstance(self.interarrival, Zero):
            raise DomainError("interarrival times must be positive a.s.; Zero is not allowed")
        if self.marks not in MARK_CONVENTIONS:
            raise ValueError(f"marks must be one of {MARK_CONVENTIONS}")

    @property
    def space(self):
        return self.chain.space

    @property
    def P(self) -> np.ndarray:
        return self.chain.P

    @property
    def pi(self) -> np.ndarray:
        return self.chain.pi

    @property
    def size(self) -> int:
        return self.chain.space.size

    @property
    def k(self) -> int:
        return self.chain.space.k

    def service_of(self, i: int) -> Distribution:
        return self.service[self.space.dim(i)]

    def delta_matrix(self, i: int) -> np.ndarray:
        return delta_matrix(self.space, i)

    def with_marks(self, marks: str) -> "ModelSpec":
        return ModelSpec(self.delta, self.chain, self.service, self.interarrival, marks)

    def mark(self, D: np.ndarray) -> np.ndarray:
        """Action of a diagonal per-arrival weight D composed with one chain step."""
        return self.P @ D if self.marks == "arrival" else D @ self.P


def as_svector(s, k: int) -> np.ndarray:
    """Validate an argument vector: all real, or all purely imaginary."""
    s = np.atleast_1d(np.asarray(s))
    if s.shape != (k,):
        raise DimensionError(f"s must have {k} components, got shape {s.shape}")
    if np.iscomplexobj(s):
        if np.any(s.real != 0):
            raise DomainError("complex s must be purely imaginary in every component")
        return s.astype(complex)
    return s.astype(float)


class PiTildeEvaluator:
    """pi_tilde(s, .) for a fixed model and s, with per-dimension constants cached."""

    def __init__(self, model: ModelSpec, s):
        self.model = model
        self.s = as_svector(s, model.k)
        self.complex = np.iscomplexobj(self.s)
        X = model.space.as_array()
        self._X = X
        self._factors = []
        for j, dist in enumerate(model.service):
            per_value = {}
            for v in np.unique(X[:, j]):
                c = self.s[j] * v
                if v == 0 or c == 0:
                    continue
                per_value[int(v)] = self._factor(dist, c)
            self._factors.append(per_value)

    def _factor(self, dist, c):
        delta = self.model.delta
        if hasattr(dist, "tail_transform"):
            g = dist.tail_transform(c, delta)
            rate = dist.rate
            return lambda r: 1.0 - np.exp(-rate * r) * (1.0 - g)
        return lambda r: dist.transform_factor(c, delta, r)

    def diag(self, r) -> np.ndarray:
        """Diagonal entries, shape (|S|,) for scalar r or (len(r), |S|)."""
        r_arr = np.asarray(r, dtype=float)
        if np.any(r_arr < 0):
            raise DomainError("age r must be >= 0")
        flat = np.atleast_1d(r_arr)
        dtype = complex if self.complex else float
        out = np.ones((flat.size, self.model.size), dtype=dtype)
        with np.errstate(over="ignore", invalid="ignore"):
            for j, per_value in enumerate(self._factors):
                for v, fac in per_value.items():
                    vals = np.broadcast_to(np.asarray(fac(flat), dtype=dtype), flat.shape)
                    if not np.all(np.isfinite(vals)):
                        raise EvaluationDomainError(
                            f"transform overflow for s_{j + 1} = {self.s[j]!r} at x_{j + 1} = {v}"
                        )
                    out[:, self._X[:, j] == v] *= vals[:, None]
        if not np.all(np.isfinite(out)):
            raise EvaluationDomainError(f"transform overflow for s = {self.s!r}")
        return out[0] if r_arr.ndim == 0 else out.reshape(r_arr.shape + (self.model.size,))

    def matrix(self, r) -> np.ndarray:
        return np.diag(self.diag(float(r)))

    def step(self, r) -> np.ndarray:
        """One arrival at age r acting on joint matrices (q_tilde' under marks='arrival')."""
        return self.model.mark(self.matrix(r))


def pi_tilde(model: ModelSpec, s, r) -> np.ndarray:
    return PiTildeEvaluator(model, s).matrix(r)


def q_tilde(model: ModelSpec, s, r) -> np.ndarray:
    return pi_tilde(model, s, r) @ model.P.T


def d_pi_tilde(model: ModelSpec, i: int, r) -> np.ndarray:
    """Derivative of pi_tilde in s_i at s = 0."""
    phi = model.service_of(i).truncated_discount(model.delta, r)
    return phi * model.delta_matrix(i)


def d2_pi_tilde(model: ModelSpec, i: int, i2: int, r) -> np.ndarray:
    """Mixed second derivative of pi_tilde in s_i, s_i2 at s = 0."""
    phi = truncated_discount_pair(model.service_of(i), model.service_of(i2), model.delta, r, same=(i == i2))
    return phi * model.delta_matrix(i) @ model.delta_matrix(i2)
