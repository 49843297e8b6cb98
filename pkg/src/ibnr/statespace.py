"""State spaces {0..K}^k of the batch chain and small Markov-chain utilities.

States are ordered lexicographically with the first coordinate most
significant.  Every matrix in the package is indexed in this order.
Dimension indices ``i`` are 1-based, matching the formulas.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .errors import DimensionError, IrreducibilityError, StateSpaceTooLarge, StochasticityError

DEFAULT_STATE_CAP = 4096
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class StateSpace:
    k: int
    K: int
    states: tuple
    restricted: bool = False
    index_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index_of", {x: n for n, x in enumerate(self.states)})
        if len(self.index_of) != len(self.states):
            raise ValueError("duplicate states")
        for x in self.states:
            if len(x) != self.k or any(not 0 <= v <= self.K for v in x):
                raise ValueError(f"state {x} is not in {{0..{self.K}}}^{self.k}")

    @property
    def size(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def dim(self, i: int) -> int:
        """0-based column for the 1-based dimension ``i``."""
        if not 1 <= i <= self.k:
            raise DimensionError(f"dimension {i} outside 1..{self.k}")
        return i - 1

    def as_array(self) -> np.ndarray:
        return np.array(self.states, dtype=np.int64).reshape(self.size, self.k)

    def label(self, n: int) -> str:
        return "(" + ",".join(str(v) for v in self.states[n]) + ")"


def enumerate_states(k: int, K: int, cap: int = DEFAULT_STATE_CAP) -> StateSpace:
    if k < 1 or K < 0:
        raise ValueError("need k >= 1 and K >= 0")
    size = (K + 1) ** k
    if size > cap:
        raise StateSpaceTooLarge(size, cap)
    states = tuple(itertools.product(range(K + 1), repeat=k))
    return StateSpace(k=k, K=K, states=states)


def restricted_space(k: int, K: int, states: Sequence[Sequence[int]]) -> StateSpace:
    """Explicit subset of the cube, kept in the order given."""
    return StateSpace(k=k, K=K, states=tuple(tuple(int(v) for v in x) for x in states), restricted=True)


def delta_matrix(space: StateSpace, i: int) -> np.ndarray:
    """diag(x_i, x in S)."""
    col = space.dim(i)
    return np.diag(space.as_array()[:, col].astype(float))


def check_stochastic(P, tol: float = STOCHASTIC_TOL, pointer: str = "") -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise StochasticityError(f"transition matrix must be square, got shape {P.shape}", pointer=pointer)
    if np.any(P < 0):
        row = int(np.argwhere(P < 0)[0, 0])
        raise StochasticityError(f"row {row} has a negative entry", row=row, pointer=f"{pointer}/{row}")
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if bad.size:
        row = int(bad[0])
        raise StochasticityError(f"row {row} sums to {float(sums[row]):.12g}, not 1", row=row, pointer=f"{pointer}/{row}")
    return P


def communicating_classes(P: np.ndarray) -> list[list[int]]:
    n, labels = connected_components(np.asarray(P) > 0, directed=True, connection="strong")
    return [np.flatnonzero(labels == c).tolist() for c in range(n)]


def is_aperiodic(P: np.ndarray) -> bool:
    """Irreducible P is aperiodic iff some power is strictly positive (Wielandt bound)."""
    n = P.shape[0]
    A = (np.asarray(P) > 0).astype(np.int64)
    M = A.copy()
    for _ in range((n - 1) ** 2):
        if M.all():
            return True
        M = np.minimum(M @ A, 1)
    return bool(M.all())


def stationary_distribution(P) -> np.ndarray:
    """Solve pi (I - P) = 0 with one equation swapped for sum(pi) = 1."""
    P = check_stochastic(P)
    classes = communicating_classes(P)
    if len(classes) > 1:
        raise IrreducibilityError(classes)
    n = P.shape[0]
    A = np.eye(n) - P.T
    A[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(A, rhs)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


@dataclass(frozen=True)
class ChainSpec:
    """Transition matrix and stationary law of the batch chain on ``space``."""

    space: StateSpace
    P: np.ndarray
    pi: np.ndarray = None

    def __post_init__(self):
        P = check_stochastic(self.P)
        if P.shape[0] != self.space.size:
            raise StochasticityError(
                f"transition matrix is {P.shape[0]}x{P.shape[0]} but the state space has {self.space.size} states"
            )
        pi = stationary_distribution(P) if self.pi is None else np.asarray(self.pi, dtype=float)
        if self.pi is not None:
            if pi.shape != (P.shape[0],) or np.any(pi < 0) or abs(pi.sum() - 1) > 1e-10:
                raise StochasticityError("pi must be a probability vector over the state space")
            if np.max(np.abs(pi @ P - pi)) > 1e-10:
                raise StochasticityError("pi is not stationary for P")
            if len(communicating_classes(P)) > 1:
                raise IrreducibilityError(communicating_classes(P))
        P.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)

    @property
    def size(self) -> int:
        return self.space.size

    def mean_batch(self, i: int) -> float:
        """E(X_i) = pi Delta_i 1 under stationarity."""
        return float(self.pi @ self.space.as_array()[:, self.space.dim(i)])


def chain_product_expectation(chain: ChainSpec, fs: Sequence) -> np.ndarray:
    """[E(f_1(S_1)...f_l(S_l) 1[S_l = y] | S_1 = x)]_{x,y}.

    Each ``f`` is either a callable on state tuples or an array of values in
    state order.  Computed as diag(f_1) P diag(f_2) ... P diag(f_l).
    """
    if len(fs) < 1:
        raise ValueError("need at least one weight function")
    weights = [_as_weights(chain.space, f) for f in fs]
    out = np.diag(weights[0])
    for w in weights[1:]:
        out = (out @ chain.P) * w[None, :]
    return out


def _as_weights(space: StateSpace, f) -> np.ndarray:
    if callable(f):
        return np.array([f(x) for x in space.states], dtype=float)
    w = np.asarray(f, dtype=float)
    if w.shape != (space.size,):
        raise ValueError(f"weight vector must have length {space.size}")
    return w
