"""Unit deterministic interarrivals: exact finite products and their limits.

With arrivals at times 1, 2, ..., the arrival at time j has age t - j at time
t, so the mgf is the ordered product step(t-1) step(t-2) ... step(0) of the
one-arrival kernels (P pi_tilde(s, a) under arrival marks).  Once every
service law is exhausted (pi_tilde = I) the remaining factors are plain powers
of P, which tend to 1 pi when P is aperiodic.
"""
from __future__ import annotations

import math

import numpy as np

from .distributions import Deterministic
from .errors import DomainError, PreconditionError
from .kernel import ModelSpec, PiTildeEvaluator
from .statespace import is_aperiodic

MAX_FACTORS = 100_000


def _require_unit(model: ModelSpec):
    tau = model.interarrival
    if not isinstance(tau, Deterministic):
        raise PreconditionError("this path needs Deterministic(1) interarrivals")
    if tau.value != 1.0:
        raise PreconditionError(
            f"deterministic interarrival {tau.value} must be rescaled to 1: "
            "divide all times by it and multiply rates (service rates, delta) by it"
        )


def _as_steps(t) -> int:
    if isinstance(t, bool) or t < 0 or int(t) != t:
        raise DomainError(f"t must be a non-negative integer, got {t!r}")
    return int(t)


def _require_aperiodic(model: ModelSpec):
    if not is_aperiodic(model.P):
        raise PreconditionError("the batch chain is periodic; P^n has no limit so the lattice limit does not exist")


def _ordered_product(model: ModelSpec, ev: PiTildeEvaluator, count: int) -> np.ndarray:
    """step(count-1) ... step(0), accumulated from the left."""
    dtype = complex if ev.complex else float
    out = np.eye(model.size, dtype=dtype)
    if count == 0:
        return out
    diags = ev.diag(np.arange(count, dtype=float))
    arrival = model.marks == "arrival"
    for a in range(count - 1, -1, -1):
        d = diags[a]
        step = model.P * d[None, :] if arrival else d[:, None] * model.P
        out = out @ step
    return out


def transient_mgf_deterministic(model: ModelSpec, s, t) -> np.ndarray:
    _require_unit(model)
    n = _as_steps(t)
    return _ordered_product(model, PiTildeEvaluator(model, s), n)


def exhaustion_time(model: ModelSpec):
    """Smallest integer M with every service law bounded by M, or None."""
    bounds = [d.bound() for d in model.service]
    if any(b is None for b in bounds):
        return None
    return int(math.ceil(max(bounds)))


def bounded_service_mgf(model: ModelSpec, s, t) -> np.ndarray:
    """Exact mgf for services bounded by M and t >= M: P^{t-M} step(M-1) ... step(0)."""
    _require_unit(model)
    n = _as_steps(t)
    M = exhaustion_time(model)
    if M is None:
        raise PreconditionError("all service laws must be bounded")
    if n < M:
        return transient_mgf_deterministic(model, s, n)
    head = _ordered_product(model, PiTildeEvaluator(model, s), M)
    return np.linalg.matrix_power(model.P, n - M) @ head


def _tail_sum_bound(model: ModelSpec, s, m: int) -> float:
    """Upper bound of sum_{a >= m} max_x |pi_tilde(s, a)_x - 1|."""
    K = model.space.K
    total = 0.0
    for sj, dist in zip(np.abs(np.asarray(s)), model.service):
        if sj == 0:
            continue
        aj = math.expm1(float(sj) * K)
        # sum_{a >= m} P(L > a) <= P(L > m) + int_m^inf P(L > r) dr
        total += aj * (float(dist.survival(float(m))) + float(dist.residual_expectation(float(m))))
    return total


def limiting_mgf_deterministic(model: ModelSpec, s, tol: float = 1e-10) -> np.ndarray:
    """lim_t psi(s, t) = 1 pi step(m*-1) ... step(0).

    Exact when every service law is bounded.  Otherwise m* is the first
    integer whose remaining factors satisfy e^A (e^{tail} - 1) < tol, where
    tail bounds the summed deviation of the discarded kernels from I and A
    bounds the summed deviation of all of them.
    """
    _require_unit(model)
    _require_aperiodic(model)
    if any(not math.isfinite(d.mean()) for d in model.service):
        raise PreconditionError("service means must be finite")
    ev = PiTildeEvaluator(model, s)
    onepi = np.outer(np.ones(model.size), model.pi)
    M = exhaustion_time(model)
    if M is None:
        A = _tail_sum_bound(model, ev.s, 0)
        M = 1
        while math.exp(A) * math.expm1(_tail_sum_bound(model, ev.s, M)) >= tol:
            M *= 2
            if M > MAX_FACTORS:
                raise PreconditionError(f"truncation needs more than {MAX_FACTORS} factors")
        lo, hi = M // 2, M
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if math.exp(A) * math.expm1(_tail_sum_bound(model, ev.s, mid)) < tol:
                hi = mid
            else:
                lo = mid
        M = hi
    return onepi @ _ordered_product(model, ev, M)


def transient_first_moment_deterministic(model: ModelSpec, i: int, t) -> np.ndarray:
    """M_i(t) = sum_{a<t} P^{t-1-a} mark(phi_i(a) Delta_i) P^a."""
    _require_unit(model)
    n = _as_steps(t)
    S = model.size
    if n == 0:
        return np.zeros((S, S))
    phi = np.asarray(model.service_of(i).truncated_discount(model.delta, np.arange(n, dtype=float)))
    A = model.mark(model.delta_matrix(i))
    powers = [np.eye(S)]
    for _ in range(n - 1):
        powers.append(powers[-1] @ model.P)
    return sum(phi[a] * powers[n - 1 - a] @ A @ powers[a] for a in range(n) if phi[a] != 0.0) + np.zeros((S, S))


def limit_first_moment_deterministic(model: ModelSpec, i: int, tol: float = 1e-12) -> np.ndarray:
    """1 pi mark(Delta_i) sum_a phi_i(a) P^a, the t -> infinity limit for aperiodic P."""
    _require_unit(model)
    _require_aperiodic(model)
    L = model.service_of(i)
    S = model.size
    bound = L.bound()
    if bound is not None:
        n = int(math.ceil(bound))
    else:
        n = 1
        while float(L.survival(float(n))) + float(L.residual_expectation(float(n))) >= tol:
            n *= 2
            if n > MAX_FACTORS:
                raise PreconditionError(f"truncation needs more than {MAX_FACTORS} terms")
    phi = np.asarray(L.truncated_discount(model.delta, np.arange(n, dtype=float)))
    acc = np.zeros((S, S))
    power = np.eye(S)
    for a in range(n):
        acc += phi[a] * power
        power = power @ model.P
    onepi = np.outer(np.ones(S), model.pi)
    return onepi @ model.mark(model.delta_matrix(i)) @ acc
