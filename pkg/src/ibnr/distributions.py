"""Interarrival and service laws.

Each law exposes only what the moment and transform formulas consume:
Laplace transform, first two moments, the truncated discounted
expectation E(e^{-delta (L - r)} 1[L > r]), the residual expectation
E((L - r) 1[L > r]), the per-dimension transform factor entering the mgf
kernel, and a sampler driven by a caller-owned ``numpy.random.Generator``.

``Zero`` is the law degenerate at 0 (an exponential with infinite rate),
kept separate so that limits at mu = infinity are exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ConfigError, DomainError

__all__ = [
    "Distribution",
    "Exponential",
    "Deterministic",
    "Gamma",
    "Zero",
    "truncated_discount",
    "truncated_discount_pair",
    "residual_expectation",
    "distribution_from_json",
]

QUAD_TOL = 1e-10


def _nonneg(name, x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError(f"{name} must be non-negative, got {x}")
    return x


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def _cquad(f, a, b):
    """Integrate a complex-valued scalar function on [a, b]."""
    re = integrate.quad(lambda v: f(v).real, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    im = integrate.quad(lambda v: f(v).imag, a, b, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    return complex(re, im)


class Distribution:
    kind = "abstract"
    lattice = False

    def laplace(self, u):
        u = _nonneg("u", u)
        return _out(self._laplace(u))

    def truncated_discount(self, delta, r):
        """E(e^{-delta (L - r)} 1[L > r])."""
        delta = float(_nonneg("delta", delta))
        r = _nonneg("r", r)
        return _out(self._truncated_discount(delta, r))

    def residual_expectation(self, r):
        """E((L - r) 1[L > r])."""
        r = _nonneg("r", r)
        return _out(self._residual(r))

    def survival(self, r):
        r = _nonneg("r", r)
        return _out(self._survival(r))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return _out(np.where(x < 0, 0.0, 1.0 - self._survival(np.maximum(x, 0.0))))

    def mean_discount_integral(self, delta):
        """(1 - L(delta)) / delta, with its delta -> 0 limit E(L)."""
        delta = float(_nonneg("delta", delta))
        if delta == 0.0:
            return self.mean()
        return (1.0 - self.laplace(delta)) / delta

    def transform_factor(self, c, delta, r):
        """E(exp(c e^{-delta (L - r)} 1[L > r])) for a real or complex scalar c."""
        raise NotImplementedError

    def partial_mean(self, lo, hi):
        """E(L 1[lo < L <= hi]), vectorised over the bounds."""
        raise NotImplementedError

    def bound(self):
        """Deterministic upper bound of the support, or None when unbounded."""
        return None

    def to_json(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.to_json().items() if k != "kind")
        return f"{type(self).__name__}({params})"


@dataclass(frozen=True, repr=False)
class Exponential(Distribution):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise ValueError("exponential rate must be positive and finite")

    def _laplace(self, u):
        return self.rate / (self.rate + u)

    def mean(self):
        return 1.0 / self.rate

    def second_moment(self):
        return 2.0 / self.rate**2

    def _survival(self, r):
        return np.exp(-self.rate * r)

    def _truncated_discount(self, delta, r):
        # memoryless: the overshoot beyond r is again Exponential(mu)
        mu = self.rate
        return mu / (mu + delta) * np.exp(-mu * r)

    def _residual(self, r):
        return np.exp(-self.rate * r) / self.rate

    def tail_transform(self, c, delta):
        """E(exp(c e^{-delta L})) = int_0^1 exp(c w^{delta/mu}) dw."""
        if delta == 0.0:
            return np.exp(c)
        p = delta / self.rate
        out = _cquad(lambda w: np.exp(c * w**p), 0.0, 1.0)
        return out if np.iscomplexobj(c) else out.real

    def transform_factor(self, c, delta, r):
        # memoryless: given L > r the overshoot is again exponential
        g = self.tail_transform(c, delta)
        return 1.0 - np.exp(-self.rate * np.asarray(r, dtype=float)) * (1.0 - g)

    def partial_mean(self, lo, hi):
        mu = self.rate
        f = lambda x: np.where(np.isinf(x), 0.0, -(x + 1.0 / mu) * np.exp(-mu * np.where(np.isinf(x), 0.0, x)))
        return f(np.asarray(hi, float)) - f(np.asarray(lo, float))

    def sample(self, rng, size=None):
        return -np.log1p(-rng.random(size)) / self.rate

    def to_json(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True, repr=False)
class Deterministic(Distribution):
    value: float
    kind = "deterministic"
    lattice = True

    def __post_init__(self):
        if not self.value >= 0 or not math.isfinite(self.value):
            raise ValueError("deterministic value must be finite and >= 0")

    def _laplace(self, u):
        return np.exp(-u * self.value)

    def mean(self):
        return float(self.value)

    def second_moment(self):
        return float(self.value) ** 2

    def _survival(self, r):
        return np.where(self.value > r, 1.0, 0.0)

    def _truncated_discount(self, delta, r):
        return np.where(self.value > r, np.exp(-delta * (self.value - r)), 0.0)

    def _residual(self, r):
        return np.maximum(self.value - r, 0.0)

    def transform_factor(self, c, delta, r):
        r = np.asarray(r, dtype=float)
        live = self.value > r
        val = np.exp(c * np.exp(-delta * (self.value - np.where(live, r, self.value))))
        return np.where(live, val, 1.0)

    def partial_mean(self, lo, hi):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        return np.where((lo < self.value) & (self.value <= hi), self.value, 0.0)

    def bound(self):
        return float(self.value)

    def sample(self, rng, size=None):
        return np.full(size, float(self.value)) if size is not None else float(self.value)

    def to_json(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True, repr=False)
class Gamma(Distribution):
    """Shape ``shape``, rate ``rate`` (mean shape / rate)."""

    shape: float
    rate: float
    kind = "gamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0) or not math.isfinite(self.shape * self.rate):
            raise ValueError("gamma shape and rate must be positive and finite")

    def _laplace(self, u):
        return (1.0 + u / self.rate) ** (-self.shape)

    def mean(self):
        return self.shape / self.rate

    def second_moment(self):
        return self.shape * (self.shape + 1.0) / self.rate**2

    def _survival(self, r):
        return special.gammaincc(self.shape, self.rate * r)

    def _truncated_discount(self, delta, r):
        # e^{delta r} int_r^inf e^{-delta u} f(u) du = e^{delta r} (b/(b+delta))^a S_{a, b+delta}(r)
        a, b = self.shape, self.rate
        tail = special.gammaincc(a, (b + delta) * r)
        with np.errstate(divide="ignore"):
            log_val = delta * r + a * np.log(b / (b + delta)) + np.log(tail)
        return np.where(tail > 0, np.exp(log_val), 0.0)

    def _residual(self, r):
        a, b = self.shape, self.rate
        return np.maximum(a / b * special.gammaincc(a + 1.0, b * r) - r * special.gammaincc(a, b * r), 0.0)

    def transform_factor(self, c, delta, r):
        r = np.asarray(r, dtype=float)
        if r.ndim:
            return np.array([self.transform_factor(c, delta, x) for x in r.ravel()]).reshape(r.shape)
        r = float(r)
        S = float(self._survival(np.float64(r)))
        val = (1.0 - S) + np.exp(c) * S
        if delta > 0.0 and S > 0.0 and c != 0:
            # integration by parts against the survival function keeps the
            # integrand bounded when shape < 1
            sv = lambda v: special.gammaincc(self.shape, self.rate * (r + v))
            g = lambda v: np.exp(c * np.exp(-delta * v)) * np.exp(-delta * v) * sv(v)
            tail = _cquad(g, 0.0, np.inf)
            val -= c * delta * (tail if np.iscomplexobj(c) else tail.real)
        return val

    def partial_mean(self, lo, hi):
        a, b = self.shape, self.rate
        F1 = lambda x: special.gammainc(a + 1.0, b * np.asarray(x, float))
        return a / b * (F1(hi) - F1(lo))

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def to_json(self):
        return {"kind": self.kind, "shape": self.shape, "rate": self.rate}


@dataclass(frozen=True, repr=False)
class Zero(Distribution):
    kind = "zero"
    lattice = True

    def _laplace(self, u):
        return np.ones_like(u)

    def mean(self):
        return 0.0

    def second_moment(self):
        return 0.0

    def _survival(self, r):
        return np.zeros_like(r)

    def _truncated_discount(self, delta, r):
        return np.zeros_like(r)

    def _residual(self, r):
        return np.zeros_like(r)

    def transform_factor(self, c, delta, r):
        return np.ones_like(np.asarray(r, dtype=float)) + 0 * c

    def partial_mean(self, lo, hi):
        return np.zeros(np.broadcast(np.asarray(lo), np.asarray(hi)).shape)

    def bound(self):
        return 0.0

    def sample(self, rng, size=None):
        return np.zeros(size) if size is not None else 0.0

    def to_json(self):
        return {"kind": self.kind}


def truncated_discount(dist: Distribution, delta, r):
    return dist.truncated_discount(delta, r)


def truncated_discount_pair(dist_i: Distribution, dist_j: Distribution, delta, r, same: bool):
    """E(e^{-delta(L_i - r)} 1[L_i > r] e^{-delta(L_j - r)} 1[L_j > r]).

    With ``same`` the two factors are one and the same service time, so the
    discount doubles; otherwise independence factorises the expectation.
    """
    if same:
        return dist_i.truncated_discount(2.0 * float(delta), r)
    return _out(np.asarray(dist_i.truncated_discount(delta, r)) * np.asarray(dist_j.truncated_discount(delta, r)))


def residual_expectation(dist: Distribution, r):
    return dist.residual_expectation(r)


_KINDS = {
    "exponential": (Exponential, ("rate",)),
    "deterministic": (Deterministic, ("value",)),
    "gamma": (Gamma, ("shape", "rate")),
    "zero": (Zero, ()),
}


def distribution_from_json(doc, pointer: str = "") -> Distribution:
    if not isinstance(doc, dict):
        raise ConfigError("distribution must be an object", pointer)
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"unknown distribution kind {kind!r}; expected one of {sorted(_KINDS)}", f"{pointer}/kind")
    cls, fields = _KINDS[kind]
    extra = set(doc) - set(fields) - {"kind"}
    if extra:
        raise ConfigError(f"unexpected fields {sorted(extra)} for {kind}", pointer)
    args = []
    for name in fields:
        if name not in doc:
            raise ConfigError(f"missing field {name!r}", f"{pointer}/{name}")
        v = doc[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{name} must be a number", f"{pointer}/{name}")
        if (kind == "deterministic" and v < 0) or (kind != "deterministic" and v <= 0):
            raise ConfigError(f"{name} must be {'>= 0' if kind == 'deterministic' else '> 0'}", f"{pointer}/{name}")
        args.append(float(v))
    return cls(*args)
