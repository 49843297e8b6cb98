"""Limits as t -> infinity under non-lattice interarrivals.

The exponential-service joint limits are built from the Laplace transform
psi_hat(0, h) = (1 - L(h)) / h (I - L(h) P)^{-1} of E(P^{N_t}) and the
transformed forcing b_hat_i(h) = c_i mark(Delta_i) psi_hat(0, a_i + h) L(h),
with c_i = mu_i / (mu_i + delta) and a_i = mu_i + delta.  Every joint limit
has the form (1 / E(tau)) 1 pi int_0^inf b(t) dt, so its rows coincide.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg

from .distributions import Exponential, Zero
from .errors import ConvergenceError, DomainError, PreconditionError
from .kernel import ModelSpec
from .transient import DEFAULT_QUAD, QuadratureConfig, integrate_matrix, psi_tilde_zero_trajectory

HORIZON_CAP = 2 ** 20
TAIL_TOL = 1e-8


def _require_nonlattice(model: ModelSpec):
    if model.interarrival.lattice:
        raise PreconditionError(
            "limits here need non-lattice interarrivals; use the deterministic module "
            "(limiting_mgf_deterministic / limit_first_moment_deterministic)"
        )


def _exp_rate(model: ModelSpec, i: int, allow_zero: bool = True) -> float:
    L = model.service_of(i)
    if isinstance(L, Exponential):
        return L.rate
    if isinstance(L, Zero) and allow_zero:
        return math.inf
    raise PreconditionError(
        f"closed-form joint limits need exponential service in dimension {i}, got {L!r}; "
        "use limit_first_moment_general or the simulator"
    )


def _ones_pi(model: ModelSpec) -> np.ndarray:
    return np.outer(np.ones(model.size), model.pi)


def resolvent(model: ModelSpec, c: float, rhs: np.ndarray) -> np.ndarray:
    """rhs @ (I - c P)^{-1}, by a linear solve with the transposed system."""
    A = np.eye(model.size) - c * model.P
    return linalg.solve(A.T, np.asarray(rhs).T).T


def psi_hat_zero(model: ModelSpec, h: float) -> np.ndarray:
    """Laplace transform int_0^inf e^{-ht} E(P^{N_t}) dt."""
    if not h > 0:
        raise DomainError("h must be > 0")
    if math.isinf(h):
        return np.zeros((model.size, model.size))
    c = float(model.interarrival.laplace(h))
    return (1.0 - c) / h * resolvent(model, c, np.eye(model.size))


def _psi_hat_left(model: ModelSpec, left: np.ndarray, h: float) -> np.ndarray:
    """left @ psi_hat(0, h), solved without forming the inverse."""
    if math.isinf(h):
        return np.zeros_like(left)
    c = float(model.interarrival.laplace(h))
    return (1.0 - c) / h * resolvent(model, c, left)


def limit_first_moment_vector(model: ModelSpec, i: int) -> np.ndarray:
    """M_i(t) 1 -> E(X_i) / E(tau) (1 - L_i(delta)) / delta, constant over initial states."""
    _require_nonlattice(model)
    value = model.chain.mean_batch(i) / model.interarrival.mean() * model.service_of(i).mean_discount_integral(model.delta)
    return np.full(model.size, value)


def limit_workload_vector(model: ModelSpec, i: int) -> np.ndarray:
    """W_i(t) 1 -> E(L_i^2) / (2 E(tau)) E(X_i).

    Each batch contributes its residual service int_0^inf E((L - r) 1[L > r]) dr
    = E(L^2) / 2 per unit of arrival rate 1 / E(tau).
    """
    _require_nonlattice(model)
    L = model.service_of(i)
    value = L.second_moment() / (2.0 * model.interarrival.mean()) * model.chain.mean_batch(i)
    return np.full(model.size, value)


def limit_first_moment_joint(model: ModelSpec, i: int) -> np.ndarray:
    _require_nonlattice(model)
    mu = _exp_rate(model, i)
    if math.isinf(mu):
        return np.zeros((model.size, model.size))
    d = model.delta
    left = _ones_pi(model) @ model.mark(model.delta_matrix(i))
    return mu / (mu + d) / model.interarrival.mean() * _psi_hat_left(model, left, mu)


def _m_hat_left(model: ModelSpec, left: np.ndarray, j: int, h: float) -> np.ndarray:
    """left @ M_hat_j(h) for exponential service in dimension j."""
    mu = _exp_rate(model, j)
    if math.isinf(mu) or math.isinf(h):
        return np.zeros_like(left)
    d = model.delta
    c = float(model.interarrival.laplace(h))
    inner = resolvent(model, c, left) @ model.mark(model.delta_matrix(j))
    return c * mu / (mu + d) * _psi_hat_left(model, inner, mu + h)


def limit_second_moment_joint(model: ModelSpec, i: int, i2: int) -> np.ndarray:
    _require_nonlattice(model)
    mu, mu2 = _exp_rate(model, i), _exp_rate(model, i2)
    S = model.size
    if math.isinf(mu) or math.isinf(mu2):
        return np.zeros((S, S))
    d = model.delta
    Di, Di2 = model.delta_matrix(i), model.delta_matrix(i2)
    onepi = _ones_pi(model)
    if i == i2:
        c_pair, a_pair = mu / (mu + 2 * d), mu
    else:
        c_pair, a_pair = mu / (mu + d) * mu2 / (mu2 + d), mu + mu2
    total = c_pair * _psi_hat_left(model, onepi @ model.mark(Di @ Di2), a_pair)
    total += mu / (mu + d) * _m_hat_left(model, onepi @ model.mark(Di), i2, mu)
    total += mu2 / (mu2 + d) * _m_hat_left(model, onepi @ model.mark(Di2), i, mu2)
    return total / model.interarrival.mean()


def limit_workload_joint(model: ModelSpec, i: int) -> np.ndarray:
    """Workload limit for exponential service; independent of delta."""
    _require_nonlattice(model)
    mu = _exp_rate(model, i, allow_zero=False)
    left = _ones_pi(model) @ model.mark(model.delta_matrix(i))
    return 1.0 / mu / model.interarrival.mean() * _psi_hat_left(model, left, mu)


def limit_first_moment_general(model: ModelSpec, i: int, quad: QuadratureConfig = DEFAULT_QUAD,
                               tol: float = TAIL_TOL) -> np.ndarray:
    """(1 / E(tau)) 1 pi int_0^inf b_i(t) dt for arbitrary service laws.

    int_0^inf b_i = mark(Delta_i int_0^inf phi_i(r) psi(0, r) dr), with phi_i the
    truncated discounted expectation.  Splitting psi(0, r) = 1 pi + (psi(0, r) - 1 pi)
    leaves the exact scalar int phi_i = (1 - L_i(delta)) / delta on the first
    part; the second part decays with the mixing of N_r and is integrated on a
    doubling horizon until both ||psi(0, T) - 1 pi|| and the service tail
    E((L_i - T) 1[L_i > T]) (which bounds int_T^inf phi_i) fall below ``tol``.
    """
    _require_nonlattice(model)
    L = model.service_of(i)
    S = model.size
    if isinstance(L, Zero):
        return np.zeros((S, S))
    A = model.mark(model.delta_matrix(i))
    onepi = _ones_pi(model)
    tau = model.interarrival
    T = tau.mean() * 10
    while True:
        traj = psi_tilde_zero_trajectory(model, T, quad.renewal_step)
        mix = float(np.max(np.abs(traj.final - onepi)))
        tail = float(L.residual_expectation(T))
        if mix < tol or tail < tol:
            break
        T *= 2
        if T > HORIZON_CAP * tau.mean():
            raise ConvergenceError(f"mixing bound {mix:.3g} / tail {tail:.3g} above {tol} at horizon cap")
    f = lambda r: L.truncated_discount(model.delta, r) * (traj.at(r) - onepi)
    bound = L.bound()
    if bound is not None and bound < T:
        diff = integrate_matrix(f, 0.0, bound, quad)
    else:
        diff = integrate_matrix(f, 0.0, T, quad)
    integral = L.mean_discount_integral(model.delta) * onepi + diff
    return onepi @ A @ integral / tau.mean()
