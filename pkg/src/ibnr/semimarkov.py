"""Semi-Markov modulated arrivals through the matrix-unit embedding.

An environment Y jumps at the epochs of a renewal process; the jump from l
to m brings one customer whose service time has law ``service_matrix[l][m]``.
Marking the n-th jump with the matrix unit e(Y_{n-1}, Y_n) turns this into
the base model with k = kappa^2 dimensions, K = 1, and the chain
p(e(l, m), e(l', m')) = 1[m = l'] p_Y(l', m').  Environment indices are
1-based throughout.

Three first-moment matrices are exposed, all with rows indexed by the
initial pair (j0, j1):

* per type: E(Z_(j2,j3)(t)), the discounted count of customers brought by
  (j2, j3) jumps (the row sums of M_(j2,j3)(t));
* by last switch: E(Z(t) 1[last jump is (j2, j3)]) (column e(j2,j3) of
  sum_i M_i(t));
* the mgf relation reads entry (e(j0,j1), e(j2,j3)) of psi(z e(j2,j3), t).
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .dispatch import LIMIT, analytic_value
from .distributions import Distribution, Zero
from .errors import DomainError, PreconditionError, StochasticityError
from .kernel import ModelSpec
from .simulator import _arrival_times, _chain_path, sample_replications, standard_error
from .statespace import ChainSpec, check_stochastic, restricted_space, stationary_distribution
from .targets import Target
from .transient import DEFAULT_QUAD, QuadratureConfig

METHODS = ("analytic", "simulate", "direct")


@dataclass(frozen=True)
class SemiMarkovSpec:
    kappa: int
    P_Y: np.ndarray
    service_matrix: tuple
    interarrival: Distribution
    delta: float
    pi_Y: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        P = check_stochastic(self.P_Y, pointer="/semi_markov/P_Y")
        if P.shape != (self.kappa, self.kappa):
            raise StochasticityError(f"P_Y must be {self.kappa}x{self.kappa}")
        rows = tuple(tuple(r) for r in self.service_matrix)
        if len(rows) != self.kappa or any(len(r) != self.kappa for r in rows):
            raise ValueError(f"service_matrix must be {self.kappa}x{self.kappa}")
        pi = stationary_distribution(P) if self.pi_Y is None else np.asarray(self.pi_Y, dtype=float)
        if np.max(np.abs(pi @ P - pi)) > 1e-10 or abs(pi.sum() - 1) > 1e-10 or np.any(pi < 0):
            raise StochasticityError("pi_Y is not a stationary distribution of P_Y")
        if not self.delta >= 0:
            raise DomainError("delta must be >= 0")
        object.__setattr__(self, "P_Y", P)
        object.__setattr__(self, "pi_Y", pi)
        object.__setattr__(self, "service_matrix", rows)
        object.__setattr__(self, "delta", float(self.delta))

    def pairs(self):
        return list(itertools.product(range(1, self.kappa + 1), repeat=2))


@dataclass(frozen=True)
class Embedding:
    spec: SemiMarkovSpec
    model: ModelSpec
    pairs: tuple
    dim_of: dict
    state_of: dict
    pair_of_state: tuple

    def closed_form_pi(self) -> np.ndarray:
        P_Y, pi_Y = self.spec.P_Y, self.spec.pi_Y
        return np.array([P_Y[l - 1, m - 1] * pi_Y[l - 1] for l, m in self.pair_of_state])


def embed(spec: SemiMarkovSpec) -> Embedding:
    """Base model on the matrix units e(l, m), ordered (l, m) lexicographically.

    Pairs with p_Y(l, m) = 0 can never be the last jump; their states are
    left out of the restricted space so that the embedded chain stays
    irreducible.  Their dimensions are kept (with all-zero Delta).
    """
    kappa = spec.kappa
    pairs = tuple(spec.pairs())
    dim_of = {p: n + 1 for n, p in enumerate(pairs)}
    live = [p for p in pairs if spec.P_Y[p[0] - 1, p[1] - 1] > 0]
    states = []
    for l, m in live:
        x = [0] * (kappa * kappa)
        x[dim_of[(l, m)] - 1] = 1
        states.append(tuple(x))
    space = restricted_space(kappa * kappa, 1, states)
    S = len(live)
    P = np.zeros((S, S))
    for a, (l, m) in enumerate(live):
        for b, (l2, m2) in enumerate(live):
            if m == l2:
                P[a, b] = spec.P_Y[l2 - 1, m2 - 1]
    pi = np.array([spec.P_Y[l - 1, m - 1] * spec.pi_Y[l - 1] for l, m in live])
    chain = ChainSpec(space, P, pi / pi.sum())
    service = [spec.service_matrix[l - 1][m - 1] for l, m in pairs]
    model = ModelSpec(spec.delta, chain, service, spec.interarrival, marks="arrival")
    return Embedding(spec, model, pairs, dim_of, {p: n for n, p in enumerate(live)}, tuple(live))


@dataclass
class ModulatedResult:
    """kappa^2 x kappa^2 matrix, rows (j0, j1) and columns (j2, j3) lexicographic.

    Rows of initial pairs that cannot occur (p_Y(j0, j1) = 0) are NaN.
    """

    values: np.ndarray
    stderr: Optional[np.ndarray] = None
    method: str = ""


def _rows_to_pairs(emb: Embedding, per_state: np.ndarray) -> np.ndarray:
    n = len(emb.pairs)
    out = np.full((n,) + per_state.shape[1:], np.nan, dtype=per_state.dtype)
    for s, p in enumerate(emb.pair_of_state):
        out[emb.dim_of[p] - 1] = per_state[s]
    return out


def _check_method(method: str):
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")


def _modulated(spec, t, method, kind, quad, reps, seed, by_last_switch=False) -> ModulatedResult:
    _check_method(method)
    emb = embed(spec)
    model = emb.model
    if method == "direct":
        if t == LIMIT:
            raise PreconditionError("simulation needs a finite t")
        rep = simulate_semimarkov(spec, float(t), reps, seed)
        key = {"first": "first", "second": "second", "workload": "workload"}[kind]
        if by_last_switch:
            key = "first_by_last"
        return ModulatedResult(rep[key][0], rep[key][1], "direct semi-Markov simulation")
    if method == "simulate":
        if t == LIMIT:
            raise PreconditionError("simulation needs a finite t")
        return _embedded_simulation(emb, float(t), kind, reps, seed, by_last_switch)
    cols = []
    note = ""
    if by_last_switch:
        total = np.zeros((model.size, model.size))
        for p in emb.pairs:
            if not isinstance(spec.service_matrix[p[0] - 1][p[1] - 1], Zero):
                m, note = analytic_value(model, Target("first", emb.dim_of[p]), t, quad)
                total = total + m
        v = np.column_stack([total[:, emb.state_of[p]] if p in emb.state_of else np.zeros(model.size)
                             for p in emb.pairs])
        return ModulatedResult(_rows_to_pairs(emb, v), None, note)
    for p in emb.pairs:
        L = spec.service_matrix[p[0] - 1][p[1] - 1]
        if isinstance(L, Zero) or p not in emb.state_of:
            cols.append(np.zeros(model.size))
            continue
        m, note = analytic_value(model, _target(kind, emb.dim_of[p]), t, quad)
        cols.append(m.sum(axis=1))
    return ModulatedResult(_rows_to_pairs(emb, np.column_stack(cols)), None, note)


def _target(kind, d):
    return Target("second", d, d) if kind == "second" else Target(kind, d)


def _embedded_simulation(emb: Embedding, t: float, kind: str, reps: int, seed: int,
                         by_last_switch: bool) -> ModulatedResult:
    model = emb.model
    n = len(emb.pairs)
    vals = np.zeros((model.size, n))
    errs = np.zeros((model.size, n))
    for x in range(model.size):
        z, y, w = sample_replications(model, t, x, reps, seed)
        if by_last_switch:
            samples = np.zeros((reps, n))
            cols = np.array([emb.dim_of[emb.pair_of_state[v]] - 1 for v in y])
            samples[np.arange(reps), cols] = z.sum(axis=1)
        elif kind == "second":
            samples = z * z
        elif kind == "workload":
            samples = w
        else:
            samples = z
        vals[x] = samples.mean(axis=0)
        errs[x] = standard_error(samples)
    return ModulatedResult(_rows_to_pairs(emb, vals), _rows_to_pairs(emb, errs), "embedded simulation")


def modulated_first_moment(spec: SemiMarkovSpec, t: Union[float, str] = LIMIT, method: str = "analytic",
                           quad: QuadratureConfig = DEFAULT_QUAD, reps: int = 10_000, seed: int = 0) -> ModulatedResult:
    return _modulated(spec, t, method, "first", quad, reps, seed)


def modulated_first_moment_by_last_switch(spec: SemiMarkovSpec, t: Union[float, str] = LIMIT,
                                          method: str = "analytic", quad: QuadratureConfig = DEFAULT_QUAD,
                                          reps: int = 10_000, seed: int = 0) -> ModulatedResult:
    return _modulated(spec, t, method, "first", quad, reps, seed, by_last_switch=True)


def modulated_second_moment(spec: SemiMarkovSpec, t: Union[float, str] = LIMIT, method: str = "analytic",
                            quad: QuadratureConfig = DEFAULT_QUAD, reps: int = 10_000, seed: int = 0) -> ModulatedResult:
    return _modulated(spec, t, method, "second", quad, reps, seed)


def modulated_workload(spec: SemiMarkovSpec, t: Union[float, str] = LIMIT, method: str = "analytic",
                       quad: QuadratureConfig = DEFAULT_QUAD, reps: int = 10_000, seed: int = 0) -> ModulatedResult:
    return _modulated(spec, t, method, "workload", quad, reps, seed)


MGF_FORMS = ("literal", "per-type", "by-last-switch")


def modulated_mgf(spec: SemiMarkovSpec, z, t: Union[float, str], form: str = "literal",
                  quad: QuadratureConfig = DEFAULT_QUAD, tol: float = 1e-10) -> ModulatedResult:
    """Embedded mgf values, one column per jump type (j2, j3).

    ``literal``: entry (e(j0,j1), e(j2,j3)) of psi(z e(j2,j3), t).
    ``per-type``: row sums of psi(z e(j2,j3), t), i.e. E(exp(z Z_(j2,j3)(t))).
    ``by-last-switch``: entry (e(j0,j1), e(j2,j3)) of psi(z 1, t), i.e.
    E(exp(z Z(t)) 1[last jump is (j2, j3)]).
    """
    if form not in MGF_FORMS:
        raise ValueError(f"form must be one of {MGF_FORMS}")
    emb = embed(spec)
    model = emb.model
    kk = len(emb.pairs)
    z = complex(z) if np.iscomplexobj(z) else float(z)
    dtype = complex if isinstance(z, complex) else float
    if form == "by-last-switch":
        psi, note = analytic_value(model, Target("mgf", s=tuple([z] * kk)), t, quad, tol)
        v = np.column_stack([psi[:, emb.state_of[p]] if p in emb.state_of else np.zeros(model.size, dtype)
                             for p in emb.pairs])
        return ModulatedResult(_rows_to_pairs(emb, v), None, note)
    cols = []
    note = ""
    for p in emb.pairs:
        s = [0.0 * z] * kk
        s[emb.dim_of[p] - 1] = z
        psi, note = analytic_value(model, Target("mgf", s=tuple(s)), t, quad, tol)
        if form == "per-type":
            cols.append(psi.sum(axis=1))
        elif p in emb.state_of:
            cols.append(psi[:, emb.state_of[p]])
        else:
            cols.append(np.zeros(model.size, dtype))
    return ModulatedResult(_rows_to_pairs(emb, np.column_stack(cols)), None, note)


# ------------------------------------------------------------ direct oracle

def simulate_semimarkov(spec: SemiMarkovSpec, t: float, reps: int, seed: int, zs: Sequence = ()) -> dict:
    """Sample the environment directly, without the embedding.

    Returns ``{name: (mean, se)}`` with kappa^2 x kappa^2 arrays (rows: initial
    pair, columns: jump type) for ``first``, ``second``, ``workload`` and
    ``first_by_last`` (total discounted count placed in the column of the
    last jump).  For every z in ``zs`` the entry ``("cf", z)`` holds
    E(exp(z Z(t))) per initial pair together with the same split by last
    jump, as a kappa^2 x kappa^2 array.
    """
    if reps < 2:
        raise DomainError("reps must be >= 2")
    if t < 0:
        raise DomainError("t must be >= 0")
    kappa = spec.kappa
    pairs = spec.pairs()
    n = len(pairs)
    cumP = np.cumsum(spec.P_Y, axis=1)
    laws = [spec.service_matrix[l - 1][m - 1] for l, m in pairs]
    names = ("first", "second", "workload", "first_by_last")
    out = {name: (np.full((n, n), np.nan), np.full((n, n), np.nan)) for name in names}
    for zval in zs:
        out[("cf", zval)] = (np.full((n, n), np.nan, dtype=complex), np.full((n, n), np.nan, dtype=complex))
    start = time.perf_counter()
    for a, (j0, j1) in enumerate(pairs):
        if spec.P_Y[j0 - 1, j1 - 1] == 0:
            continue
        z = np.zeros((reps, n))
        w = np.zeros((reps, n))
        last = np.empty(reps, dtype=np.int64)
        for r in range(reps):
            rng = np.random.default_rng([seed, a, r])
            T = _arrival_times(spec.interarrival, t, rng)
            after = _chain_path(cumP, j1 - 1, T.size, rng)
            before = np.concatenate([[j1 - 1], after[:-1]]).astype(np.int64)
            types = before * kappa + after
            for d in np.unique(types):
                sel = types == d
                L = np.asarray(laws[d].sample(rng, int(sel.sum())), dtype=float)
                rem = T[sel] + L - t
                live = rem > 0
                z[r, d] = np.sum(np.exp(-spec.delta * rem[live]))
                w[r, d] = np.sum(rem[live])
            last[r] = types[-1] if T.size else a
        by_last = np.zeros((reps, n))
        by_last[np.arange(reps), last] = z.sum(axis=1)
        for name, samples in zip(names, (z, z * z, w, by_last)):
            out[name][0][a] = samples.mean(axis=0)
            out[name][1][a] = standard_error(samples)
        for zval in zs:
            split = np.zeros((reps, n), dtype=complex)
            split[np.arange(reps), last] = np.exp(zval * z.sum(axis=1))
            out[("cf", zval)][0][a] = split.mean(axis=0)
            out[("cf", zval)][1][a] = standard_error(split)
    out["elapsed"] = time.perf_counter() - start
    return out
