"""Choose the analytic method for a target given the interarrival law."""
from __future__ import annotations

import math
from typing import Union

import numpy as np

from . import asymptotics, deterministic, transient
from .distributions import Deterministic, Exponential, Gamma, Zero
from .errors import PreconditionError
from .kernel import ModelSpec
from .targets import Target
from .transient import DEFAULT_QUAD, QuadratureConfig

LIMIT = "limit"


def _renewal_step(model: ModelSpec, quad: QuadratureConfig) -> float:
    tau = model.interarrival
    if isinstance(tau, Deterministic):
        # the grid must contain the atom
        return tau.value / max(1, math.ceil(tau.value / quad.renewal_step - 1e-9))
    return quad.renewal_step


def analytic_value(model: ModelSpec, target: Target, t: Union[float, str],
                   quad: QuadratureConfig = DEFAULT_QUAD, tol: float = 1e-10) -> tuple[np.ndarray, str]:
    """Joint matrix for ``target`` at time t (or its limit) and a short method note."""
    tau = model.interarrival
    kind = target.kind
    if t == LIMIT:
        if isinstance(tau, Deterministic):
            note = "lattice interarrival: routed to the deterministic module"
            if kind == "first":
                return deterministic.limit_first_moment_deterministic(model, target.i), note
            if kind == "mgf":
                return deterministic.limiting_mgf_deterministic(model, target.s_vector, tol), note
            raise PreconditionError(f"no {kind} limit is available for lattice interarrivals")
        if kind == "first":
            L = model.service_of(target.i)
            if isinstance(L, (Exponential, Zero)):
                return asymptotics.limit_first_moment_joint(model, target.i), "closed-form limit"
            return asymptotics.limit_first_moment_general(model, target.i, quad), "quadrature limit"
        if kind == "second":
            return asymptotics.limit_second_moment_joint(model, target.i, target.i2), "closed-form limit"
        if kind == "workload":
            if isinstance(model.service_of(target.i), Zero):
                return np.zeros((model.size, model.size)), "zero service"
            return asymptotics.limit_workload_joint(model, target.i), "closed-form limit"
        raise PreconditionError("the mgf limit is only available for Deterministic(1) interarrivals")
    t = float(t)
    if isinstance(tau, Exponential) or (isinstance(tau, Gamma) and tau.shape == 1.0):
        note = "Poisson ODE"
        if kind == "first":
            return transient.transient_first_moment_poisson(model, target.i, t, quad), note
        if kind == "second":
            return transient.transient_second_moment_poisson(model, target.i, target.i2, t, quad), note
        if kind == "workload":
            return transient.transient_workload_poisson(model, target.i, t, quad), note
        return transient.transient_mgf_poisson(model, target.s_vector, t, quad), note
    if isinstance(tau, Deterministic) and tau.value == 1.0 and float(t).is_integer():
        note = "lattice interarrival: exact products"
        if kind == "first":
            return deterministic.transient_first_moment_deterministic(model, target.i, int(t)), note
        if kind == "mgf":
            return deterministic.transient_mgf_deterministic(model, target.s_vector, int(t)), note
    h = _renewal_step(model, quad)
    note = f"renewal solver, h={h:g}"
    if kind == "first":
        return transient.transient_first_moment_renewal(model, target.i, t, h).final, note
    if kind == "second":
        return transient.transient_second_moment_renewal(model, target.i, target.i2, t, h).final, note
    if kind == "workload":
        return transient.transient_workload_renewal(model, target.i, t, h).final, note
    return transient.transient_mgf_renewal(model, target.s_vector, t, h).final, note
