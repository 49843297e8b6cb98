"""Monte Carlo estimation of joint moments, workload and mgf values.

Each replication draws the arrival epochs up to t, one chain path started at
the given initial state, and one service time per arrival and dimension.
The whole batch of an arrival shares its service time in each dimension.
Replication r from initial state x uses the stream ``default_rng([seed, x, r])``
so results do not depend on execution order.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError
from .kernel import ModelSpec
from .targets import Target


@dataclass(frozen=True)
class PathSample:
    z_tilde: np.ndarray
    terminal_state: int
    workload: np.ndarray
    arrivals_used: int


@dataclass
class EstimateReport:
    """Per-target cell means and standard errors.

    ``values[label]`` and ``stderr[label]`` have one row per initial state in
    ``initial_states`` and one column per terminal state.  For complex
    targets the standard error holds the real-part SE in its real part and
    the imaginary-part SE in its imaginary part.
    """

    targets: list
    values: dict
    stderr: dict
    reps: int
    seed: int
    t: float
    initial_states: list
    marks: str
    elapsed: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.reps < 2:
            raise ValueError("need at least two replications")

    def value(self, target: Target) -> np.ndarray:
        return self.values[target.label]

    def se(self, target: Target) -> np.ndarray:
        return self.stderr[target.label]


def _arrival_times(tau, t: float, rng) -> np.ndarray:
    chunk = max(16, int(1.25 * t / tau.mean()) + 16)
    parts, total = [], 0.0
    while True:
        gaps = np.asarray(tau.sample(rng, chunk), dtype=float)
        epochs = total + np.cumsum(gaps)
        parts.append(epochs)
        if epochs[-1] > t:
            break
        total = epochs[-1]
    epochs = np.concatenate(parts)
    return epochs[: np.searchsorted(epochs, t, side="right")]


def _chain_path(cumP: np.ndarray, x: int, n: int, rng) -> np.ndarray:
    """States X_1..X_n from X_0 = x, by a prefix scan of transition maps."""
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    u = rng.random(n)
    S = cumP.shape[0]
    # maps[m, s] = next state from s under uniform u_m
    maps = np.minimum((u[:, None, None] >= cumP[None]).sum(axis=2), S - 1)
    d = 1
    while d < n:
        maps[d:] = np.take_along_axis(maps[d:], maps[:-d], axis=1)
        d *= 2
    return maps[:, x]


def _draw(model: ModelSpec, t: float, x: int, rng, cumP):
    T = _arrival_times(model.interarrival, t, rng)
    n = T.size
    path = _chain_path(cumP, x, n, rng)
    L = np.column_stack([np.asarray(d.sample(rng, n), dtype=float) for d in model.service]) if n else np.zeros((0, model.k))
    X = model.space.as_array()
    if model.marks == "arrival":
        carried = path
    else:
        carried = np.concatenate([[x], path[:-1]]) if n else path
    batches = X[carried].astype(float) if n else np.zeros((0, model.k))
    remaining = T[:, None] + L - t
    live = remaining > 0
    z = np.where(live, batches * np.exp(-model.delta * remaining), 0.0).sum(axis=0)
    w = np.where(live, batches * remaining, 0.0).sum(axis=0)
    terminal = int(path[-1]) if n else x
    return z, terminal, w, n


def simulate_path(model: ModelSpec, t: float, x: int, rng: np.random.Generator) -> PathSample:
    """One path of (Z_tilde(t), X_{N_t}, D(t), N_t) from initial state index x."""
    if t < 0:
        raise DomainError("t must be >= 0")
    if not 0 <= x < model.size:
        raise DomainError(f"initial state {x} outside 0..{model.size - 1}")
    cumP = np.cumsum(model.P, axis=1)
    z, y, w, n = _draw(model, t, x, rng, cumP)
    return PathSample(z, y, w, n)


def sample_replications(model: ModelSpec, t: float, x: int, reps: int, seed: int, cumP=None):
    """Per-replication (Z_tilde(t), X_{N_t}, D(t)) from initial state x."""
    if cumP is None:
        cumP = np.cumsum(model.P, axis=1)
    z = np.empty((reps, model.k))
    w = np.empty((reps, model.k))
    y = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        rng = np.random.default_rng([seed, x, r])
        z[r], y[r], w[r], _ = _draw(model, t, x, rng, cumP)
    return z, y, w


def standard_error(samples: np.ndarray, axis: int = 0) -> np.ndarray:
    """Standard error of the mean; real and imaginary parts separately."""
    n = samples.shape[axis]
    if np.iscomplexobj(samples):
        return (samples.real.std(axis=axis, ddof=1) + 1j * samples.imag.std(axis=axis, ddof=1)) / np.sqrt(n)
    return samples.std(axis=axis, ddof=1) / np.sqrt(n)


def target_samples(target: Target, z, w):
    if target.kind == "first":
        return z[:, target.i - 1]
    if target.kind == "second":
        return z[:, target.i - 1] * z[:, target.i2 - 1]
    if target.kind == "workload":
        return w[:, target.i - 1]
    return np.exp(z @ target.s_vector)


def estimate(model: ModelSpec, t: float, targets: Sequence[Target], reps: int, seed: int,
             initial_states: Optional[Sequence[int]] = None) -> EstimateReport:
    """Cell-wise sample means over ``reps`` paths per initial state."""
    if reps < 2:
        raise DomainError("reps must be >= 2")
    if not targets:
        raise DomainError("targets must be non-empty")
    if t < 0:
        raise DomainError("t must be >= 0")
    start = time.perf_counter()
    states = list(range(model.size)) if initial_states is None else [int(x) for x in initial_states]
    cumP = np.cumsum(model.P, axis=1)
    S = model.size
    values = {tg.label: [] for tg in targets}
    errs = {tg.label: [] for tg in targets}
    for x in states:
        z, y, w = sample_replications(model, t, x, reps, seed, cumP)
        onehot = np.zeros((reps, S))
        onehot[np.arange(reps), y] = 1.0
        for tg in targets:
            cells = target_samples(tg, z, w)[:, None] * onehot
            values[tg.label].append(cells.mean(axis=0))
            errs[tg.label].append(standard_error(cells))
    return EstimateReport(
        targets=list(targets),
        values={k: np.array(v) for k, v in values.items()},
        stderr={k: np.array(v) for k, v in errs.items()},
        reps=reps,
        seed=seed,
        t=float(t),
        initial_states=states,
        marks=model.marks,
        elapsed=time.perf_counter() - start,
    )
