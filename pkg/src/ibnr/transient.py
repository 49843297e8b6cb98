"""Finite-horizon quantities.

* psi_tilde(0, r) = E(P^{N_r}) by uniformization (Poisson arrivals), by
  matrix powers (deterministic arrivals) or by solving its renewal equation.
* The Poisson mgf ODE and the Poisson moment / workload ODEs, integrated by
  classical RK4 with the matrix exponential supplied exactly at stage times.
* A Markov renewal solver M = b + (PF) * M on a uniform grid, with the
  forcing terms b_i, b_ii' and the workload forcing built from the model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, signal, special, stats

from .distributions import Deterministic, Distribution, Exponential, Gamma, truncated_discount_pair
from .errors import CoverageError, DomainError, PreconditionError, PropagationError
from .kernel import ModelSpec, PiTildeEvaluator

UNIFORMIZATION_TAIL = 1e-14


@dataclass(frozen=True)
class QuadratureConfig:
    method: str = "adaptive"
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_subdivisions: int = 200
    ode_step: Optional[float] = None
    renewal_step: float = 1e-3

    def __post_init__(self):
        if self.method not in ("adaptive", "gauss-legendre"):
            raise ValueError("method must be 'adaptive' or 'gauss-legendre'")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.ode_step is not None and not self.ode_step > 0:
            raise ValueError("ode_step must be positive")
        if not self.renewal_step > 0:
            raise ValueError("renewal_step must be positive")

    def step_for(self, model: ModelSpec) -> float:
        if self.ode_step is not None:
            return self.ode_step
        return min(1e-3, model.interarrival.mean() / 100.0)


DEFAULT_QUAD = QuadratureConfig()


def integrate_matrix(f: Callable, a: float, b: float, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Integral of a matrix-valued function over [a, b]."""
    if b <= a:
        return np.zeros_like(np.asarray(f(a)))
    if quad.method == "adaptive":
        return integrate.quad_vec(f, a, b, epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions)[0]
    nodes, weights = np.polynomial.legendre.leggauss(20)
    edges = np.linspace(a, b, quad.max_subdivisions + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        total = total + half * sum(w * f(mid + half * x) for x, w in zip(nodes, weights))
    return total


@dataclass
class Trajectory:
    """Joint matrices on the uniform grid 0, h, ..., n h."""

    grid: np.ndarray
    values: np.ndarray
    semantics: str = ""

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.values.shape[0] != self.grid.size:
            raise ValueError("one value per grid point required")
        if self.grid.size > 1:
            d = np.diff(self.grid)
            if np.max(np.abs(d - d[0])) > 1e-12 * max(1.0, self.grid[-1]):
                raise ValueError("grid must be uniform")

    @property
    def step(self) -> float:
        return float(self.grid[1] - self.grid[0]) if self.grid.size > 1 else 0.0

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def at(self, t) -> np.ndarray:
        """Linear interpolation; extrapolation is refused."""
        t_arr = np.asarray(t, dtype=float)
        tol = 1e-12 * max(1.0, self.horizon)
        if np.any(t_arr < -tol) or np.any(t_arr > self.horizon + tol):
            raise CoverageError(f"time {t} outside trajectory range [0, {self.horizon}]")
        if self.grid.size == 1:
            return np.broadcast_to(self.values[0], t_arr.shape + self.values.shape[1:]).copy()
        h = self.step
        pos = np.clip(t_arr / h, 0.0, self.grid.size - 1)
        lo = np.minimum(np.floor(pos).astype(int), self.grid.size - 2)
        w = (pos - lo)[..., None, None]
        return (1 - w) * self.values[lo] + w * self.values[lo + 1]


def uniform_grid(T: float, h: float) -> tuple[np.ndarray, float]:
    """Uniform grid on [0, T] whose step is at most h (T itself is hit exactly)."""
    if T < 0:
        raise DomainError("horizon must be >= 0")
    if T == 0:
        return np.zeros(1), h
    n = max(1, int(math.ceil(T / h - 1e-9)))
    return np.linspace(0.0, T, n + 1), T / n


# ---------------------------------------------------------------- psi(0, r)

def uniformization_expm(P: np.ndarray, x: float, tail: float = UNIFORMIZATION_TAIL) -> np.ndarray:
    """exp(x (P - I)) = sum_n Poisson(n; x) P^n for stochastic P and x >= 0."""
    if x < 0:
        raise DomainError("uniformization needs x >= 0")
    n = P.shape[0]
    if x == 0:
        return np.eye(n)
    # terms up to the upper (1 - tail) quantile; the dropped mass bounds the error
    top = int(stats.poisson.isf(tail, x)) + 1
    weights = stats.poisson.pmf(np.arange(top + 1), x)
    out = np.zeros_like(P, dtype=float)
    power = np.eye(n)
    for w in weights:
        out += w * power
        power = power @ P
    return out


def psi_tilde_zero(model: ModelSpec, r: float, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """E(P^{N_r})."""
    if r < 0:
        raise DomainError("r must be >= 0")
    tau = model.interarrival
    if r == 0:
        return np.eye(model.size)
    if isinstance(tau, Exponential):
        return uniformization_expm(model.P, tau.rate * r)
    if isinstance(tau, Deterministic):
        return np.linalg.matrix_power(model.P, int(math.floor(r / tau.value + 1e-9)))
    return psi_tilde_zero_trajectory(model, r, quad.renewal_step).final


def psi_tilde_zero_trajectory(model: ModelSpec, T: float, h: float) -> Trajectory:
    grid, h = uniform_grid(T, h)
    tau = model.interarrival
    if isinstance(tau, Exponential):
        values = _propagate_expm(model.P, tau.rate, h, grid.size)
    elif isinstance(tau, Deterministic):
        values = np.array([psi_tilde_zero(model, t) for t in grid])
    else:
        surv = tau.survival(grid)
        b = surv[:, None, None] * np.eye(model.size)[None]
        return solve_markov_renewal(b, model, h, T, semantics="psi_zero")
    return Trajectory(grid, values, "psi_zero")


def _propagate_expm(P: np.ndarray, lam: float, h: float, count: int) -> np.ndarray:
    step = uniformization_expm(P, lam * h)
    out = np.empty((count,) + P.shape)
    out[0] = np.eye(P.shape[0])
    for n in range(1, count):
        out[n] = out[n - 1] @ step
    return out


# ------------------------------------------------------------- Poisson ODEs

def _require_poisson(model: ModelSpec) -> float:
    tau = model.interarrival
    if isinstance(tau, Gamma) and tau.shape == 1.0:
        return tau.rate
    if not isinstance(tau, Exponential):
        raise PreconditionError(
            "closed-form transient results need exponential interarrivals; "
            "use the renewal solver for other laws"
        )
    return model.interarrival.rate


def _half_grid(t: float, step: float):
    if t < 0:
        raise DomainError("t must be >= 0")
    n = max(1, int(math.ceil(t / step - 1e-9))) if t > 0 else 0
    h = t / n if n else 0.0
    return n, h, np.arange(2 * n + 1) * (h / 2)


def transient_mgf_poisson(model: ModelSpec, s, t: float, quad: QuadratureConfig = DEFAULT_QUAD,
                          trajectory: bool = False):
    """RK4 integration of d/dt psi = lambda (G(s, t) - I) psi, psi(s, 0) = I.

    G(s, t) is one arrival at age t: P pi_tilde(s, t) for arrival marks.
    """
    lam = _require_poisson(model)
    n, h, half = _half_grid(t, quad.step_for(model))
    ev = PiTildeEvaluator(model, s)
    dtype = complex if ev.complex else float
    size = model.size
    psi = np.eye(size, dtype=dtype)
    out = [psi.copy()] if trajectory else None
    if n:
        diags = ev.diag(half)
        eye = np.eye(size)
        if model.marks == "arrival":
            G = lambda m: (model.P * diags[m][None, :]) - eye
        else:
            G = lambda m: (diags[m][:, None] * model.P) - eye
        for step in range(n):
            g0, g1, g2 = G(2 * step), G(2 * step + 1), G(2 * step + 2)
            k1 = lam * g0 @ psi
            k2 = lam * g1 @ (psi + 0.5 * h * k1)
            k3 = lam * g1 @ (psi + 0.5 * h * k2)
            k4 = lam * g2 @ (psi + h * k3)
            psi = psi + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if trajectory:
                out.append(psi.copy())
    if trajectory:
        return Trajectory(np.linspace(0, t, n + 1), np.array(out), "mgf")
    return psi


def _poisson_march(model: ModelSpec, t: float, quad: QuadratureConfig, forcings: Callable, count: int,
                   trajectory: bool, semantics: str):
    """RK4 for Y_j' = lambda (P - I) Y_j + f_j(stage, Y), Y_j(0) = 0, j < count.

    ``forcings(m, E, Y)`` returns the stacked forcing at half-grid index m, with
    E = exp(lambda t_m (P - I)) supplied exactly.
    """
    lam = _require_poisson(model)
    n, h, half = _half_grid(t, quad.step_for(model))
    size = model.size
    L = lam * (model.P - np.eye(size))
    Y = np.zeros((count, size, size))
    out = [Y.copy()] if trajectory else None
    if n:
        a_half = uniformization_expm(model.P, lam * h / 2)
        E0 = np.eye(size)
        for step in range(n):
            E1 = E0 @ a_half
            E2 = E1 @ a_half
            m = 2 * step
            k1 = L @ Y + forcings(m, E0, Y)
            Ya = Y + 0.5 * h * k1
            k2 = L @ Ya + forcings(m + 1, E1, Ya)
            Yb = Y + 0.5 * h * k2
            k3 = L @ Yb + forcings(m + 1, E1, Yb)
            Yc = Y + h * k3
            k4 = L @ Yc + forcings(m + 2, E2, Yc)
            Y = Y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            E0 = E2
            if trajectory:
                out.append(Y.copy())
    if trajectory:
        return Trajectory(np.linspace(0, t, n + 1), np.array(out)[:, -1], semantics)
    return Y[-1]


def transient_first_moment_poisson(model: ModelSpec, i: int, t: float, quad: QuadratureConfig = DEFAULT_QUAD,
                                   trajectory: bool = False):
    """M_i(t) from M' = lambda phi_i(t) mark(Delta_i) e^{lambda t (P - I)} + lambda (P - I) M, M(0) = 0."""
    return _first_order_march(model, i, t, quad, trajectory, "first_moment",
                              lambda r: model.service_of(i).truncated_discount(model.delta, r))


def transient_workload_poisson(model: ModelSpec, i: int, t: float, quad: QuadratureConfig = DEFAULT_QUAD,
                               trajectory: bool = False):
    """W_i(t): same scheme with forcing E((L_i - v) 1[L_i > v])."""
    return _first_order_march(model, i, t, quad, trajectory, "workload",
                              lambda r: model.service_of(i).residual_expectation(r))


def _first_order_march(model, i, t, quad, trajectory, semantics, weight):
    lam = _require_poisson(model)
    n, h, half = _half_grid(t, quad.step_for(model))
    phi = lam * np.asarray(weight(half), dtype=float)
    D = model.mark(model.delta_matrix(i))

    def forcing(m, E, Y):
        return (phi[m] * (D @ E))[None]

    return _poisson_march(model, t, quad, forcing, 1, trajectory, semantics)


def transient_second_moment_poisson(model: ModelSpec, i: int, i2: int, t: float,
                                    quad: QuadratureConfig = DEFAULT_QUAD, trajectory: bool = False):
    """M_ii'(t), integrated jointly with M_i and M_i'."""
    lam = _require_poisson(model)
    n, h, half = _half_grid(t, quad.step_for(model))
    Li, Li2 = model.service_of(i), model.service_of(i2)
    phi_i = lam * np.asarray(Li.truncated_discount(model.delta, half), dtype=float)
    phi_i2 = lam * np.asarray(Li2.truncated_discount(model.delta, half), dtype=float)
    phi_pair = lam * np.asarray(truncated_discount_pair(Li, Li2, model.delta, half, same=(i == i2)), dtype=float)
    Di, Di2 = model.delta_matrix(i), model.delta_matrix(i2)
    Ai, Ai2, Apair = model.mark(Di), model.mark(Di2), model.mark(Di @ Di2)

    if i == i2:
        def forcing(m, E, Y):
            Mi = Y[0]
            return np.stack([phi_i[m] * (Ai @ E), phi_pair[m] * (Apair @ E) + 2 * phi_i[m] * (Ai @ Mi)])
        count = 2
    else:
        def forcing(m, E, Y):
            Mi, Mi2 = Y[0], Y[1]
            return np.stack([
                phi_i[m] * (Ai @ E),
                phi_i2[m] * (Ai2 @ E),
                phi_pair[m] * (Apair @ E) + phi_i[m] * (Ai @ Mi2) + phi_i2[m] * (Ai2 @ Mi),
            ])
        count = 3
    return _poisson_march(model, t, quad, forcing, count, trajectory, "second_moment")


# --------------------------------------------------------- renewal solver

def renewal_weights(tau: Distribution, h: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product-trapezoid weights of dF on the cells ((j-1)h, jh], j = 1..n.

    alpha_j multiplies the value at the left lag (u = (j-1)h), beta_j the
    value at the right lag (u = jh).  Index 0 of both arrays is unused.
    """
    edges = np.arange(n + 1) * h
    if isinstance(tau, Deterministic):
        ratio = tau.value / h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise PreconditionError(
                f"grid step {h} must divide the deterministic interarrival {tau.value}"
            )
        alpha = np.zeros(n + 1)
        beta = np.zeros(n + 1)
        j = int(round(ratio))
        if 1 <= j <= n:
            beta[j] = 1.0
        return alpha, beta
    cdf = tau.cdf(edges)
    mass = np.diff(cdf)
    pm = tau.partial_mean(edges[:-1], edges[1:])
    j = np.arange(1, n + 1)
    alpha = np.concatenate([[0.0], j * mass - pm / h])
    beta = np.concatenate([[0.0], pm / h - (j - 1) * mass])
    return alpha, beta


def discrete_convolution(tau: Distribution, g: np.ndarray, h: float) -> np.ndarray:
    """int_0^{t_n} g(t_n - u) dF(u) for every grid point, g given on the grid."""
    n = g.shape[0] - 1
    alpha, beta = renewal_weights(tau, h, n + 1)
    # lag m carries alpha_{m+1} + beta_m; the full convolution also adds the
    # cell beyond t_n (alpha_{n+1} g_0), removed afterwards
    w = alpha[1:n + 2] + beta[0:n + 1]
    shape = (-1,) + (1,) * (g.ndim - 1)
    if n:
        out = signal.fftconvolve(w.reshape(shape), g, axes=0)[: n + 1]
    else:
        out = w[0] * g
    return out - alpha[1:n + 2].reshape(shape) * g[0][None]


KERNEL_TAIL = 1e-17
RENEWAL_BLOCK = 64


def _kernel_reach(tau: Distribution, h: float, n: int) -> int:
    """Number of grid lags carrying interarrival mass above KERNEL_TAIL."""
    bound = tau.bound()
    if bound is not None:
        return min(n, int(math.ceil(bound / h - 1e-9)) + 1)
    x = tau.mean()
    while float(tau.survival(x)) > KERNEL_TAIL:
        x *= 2
        if x / h > n:
            return n
    return min(n, int(math.ceil(x / h)) + 1)


def solve_markov_renewal(forcing, model: ModelSpec, h: float, T: float, kernel=None,
                         semantics: str = "") -> Trajectory:
    """Solve M(t) = b(t) + int_0^t K(t - u) M(t - u) dF(u) on [0, T].

    ``forcing`` is either an array of b on the grid or an object with an
    ``on_grid(h, n)`` method.  ``kernel`` defaults to the constant P (the
    moment equations); pass an array of per-grid-point matrices for the
    mgf equation.
    """
    if not h > 0 or T < 0:
        raise DomainError("need h > 0 and T >= 0")
    grid, h = uniform_grid(T, h)
    n = grid.size - 1
    b = forcing.on_grid(h, n) if hasattr(forcing, "on_grid") else np.asarray(forcing)
    if b.shape[0] != n + 1:
        raise ValueError(f"forcing has {b.shape[0]} grid values, expected {n + 1}")
    bad = ~np.all(np.isfinite(b.reshape(n + 1, -1)), axis=1)
    if bad.any():
        at = int(np.argmax(bad))
        raise PropagationError(f"non-finite forcing at grid point {at} (t = {grid[at]:.6g})")
    size = model.size
    if kernel is None:
        K = np.broadcast_to(model.P, (n + 1, size, size))
    else:
        K = np.asarray(kernel)
    alpha, beta = renewal_weights(model.interarrival, h, n + 1)
    w = np.zeros(n + 1)
    w[1:] = alpha[2:n + 2] + beta[1:n + 1]
    M = np.zeros((n + 1,) + b.shape[1:], dtype=np.result_type(b, K))
    KM = np.zeros_like(M)
    flat = KM.reshape(n + 1, -1)
    eye = np.eye(size)
    M[0] = b[0]
    KM[0] = K[0] @ M[0]
    J = _kernel_reach(model.interarrival, h, n)
    w[J + 1:] = 0.0
    wpad = np.concatenate([w, np.zeros(RENEWAL_BLOCK + 1)])
    const = kernel is None
    if const:
        lhs_inv = np.linalg.inv(eye - alpha[1] * model.P)
    # Lags 1..m-1 carry alpha_{l+1} + beta_l and lag m (u = t_m) only beta_m;
    # lags beyond J carry no interarrival mass.  History older than the
    # current block enters through one Toeplitz product per block.
    for m0 in range(1, n + 1, RENEWAL_BLOCK):
        m1 = min(m0 + RENEWAL_BLOCK, n + 1)
        jlo = max(1, m0 - J)
        ncols = m0 - jlo
        if ncols:
            # row r holds the weights of lags r+1 .. r+ncols, oldest source first
            Wb = np.lib.stride_tricks.sliding_window_view(wpad, ncols)[1:m1 - m0 + 1, ::-1]
            far = Wb @ flat[jlo:m0]
        else:
            far = np.zeros((m1 - m0, flat.shape[1]), dtype=M.dtype)
        for m in range(m0, m1):
            hist = far[m - m0]
            if m > m0:
                hist = hist + w[m - m0:0:-1] @ flat[m0:m]
            if m <= J:
                hist = hist + beta[m] * flat[0]
            rhs = b[m] + hist.reshape(M.shape[1:])
            M[m] = lhs_inv @ rhs if const else np.linalg.solve(eye - alpha[1] * K[m], rhs)
            KM[m] = K[m] @ M[m]
    return Trajectory(grid, M, semantics)


# ------------------------------------------------------------- forcings

class Forcing:
    """b(t) = int_0^t g(t - y) dF(y) for a matrix function g of the age."""

    def __init__(self, model: ModelSpec, g: Callable, g_grid: Callable, horizon: float = math.inf):
        self.model = model
        self.g = g
        self._g_grid = g_grid
        self.horizon = horizon

    def on_grid(self, h: float, n: int) -> np.ndarray:
        if n * h > self.horizon * (1 + 1e-12):
            raise CoverageError(f"forcing only covers [0, {self.horizon}], asked for {n * h}")
        g = self._g_grid(h, n)
        return discrete_convolution(self.model.interarrival, g, h)

    def __call__(self, t: float, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
        if t < 0:
            raise DomainError("t must be >= 0")
        if t > self.horizon * (1 + 1e-12):
            raise CoverageError(f"forcing only covers [0, {self.horizon}]")
        tau = self.model.interarrival
        size = self.model.size
        if t == 0:
            return np.zeros((size, size))
        if isinstance(tau, Deterministic):
            return self.g(t - tau.value) if tau.value <= t else np.zeros((size, size))
        if isinstance(tau, Exponential):
            lam = tau.rate
            return integrate_matrix(lambda y: lam * math.exp(-lam * y) * self.g(t - y), 0.0, t, quad)
        # integrate in probability space to absorb density singularities at 0
        a, b = tau.shape, tau.rate
        top = float(tau.cdf(t))
        return integrate_matrix(lambda p: self.g(max(t - special.gammaincinv(a, p) / b, 0.0)), 0.0, top, quad)


def _psi0_source(model: ModelSpec, psi0: Optional[Trajectory]):
    """Callable and grid version of psi_tilde(0, .)."""
    tau = model.interarrival
    if psi0 is not None:
        return psi0.at, lambda h, n: psi0.at(np.arange(n + 1) * h), psi0.horizon
    if isinstance(tau, Exponential):
        lam = tau.rate
        return (lambda r: uniformization_expm(model.P, lam * r),
                lambda h, n: _propagate_expm(model.P, lam, h, n + 1), math.inf)
    if isinstance(tau, Deterministic):
        grid_fn = lambda h, n: np.array([psi_tilde_zero(model, m * h) for m in range(n + 1)])
        return (lambda r: psi_tilde_zero(model, r)), grid_fn, math.inf
    # general law: solve once on demand, cached per step
    cache = {}

    def grid_fn(h, n):
        key = (h, n)
        if key not in cache:
            cache[key] = psi_tilde_zero_trajectory(model, n * h, h).values
        return cache[key]

    def point(r):
        raise PreconditionError("pointwise psi(0, r) for this interarrival law needs a precomputed trajectory (psi0=)")

    return point, grid_fn, math.inf


def _age_forcing(model: ModelSpec, weight: Callable, D: np.ndarray, psi0: Optional[Trajectory]) -> Forcing:
    A = model.mark(D)
    psi_at, psi_grid, horizon = _psi0_source(model, psi0)
    g = lambda r: float(weight(r)) * (A @ psi_at(r))
    g_grid = lambda h, n: np.asarray(weight(np.arange(n + 1) * h), dtype=float)[:, None, None] * (A @ psi_grid(h, n))
    return Forcing(model, g, g_grid, horizon)


def forcing_b_first(model: ModelSpec, i: int, psi0: Optional[Trajectory] = None) -> Forcing:
    """b_i(t) = int_0^t d_pi_tilde(i, t - y) acting with one chain step on psi(0, t - y) dF(y)."""
    L = model.service_of(i)
    return _age_forcing(model, lambda r: L.truncated_discount(model.delta, r), model.delta_matrix(i), psi0)


def forcing_workload(model: ModelSpec, i: int, psi0: Optional[Trajectory] = None) -> Forcing:
    """l_i(t): the workload analogue of b_i with weight E((L_i - r) 1[L_i > r])."""
    L = model.service_of(i)
    return _age_forcing(model, L.residual_expectation, model.delta_matrix(i), psi0)


def forcing_b_second(model: ModelSpec, i: int, i2: int, M_i: Trajectory, M_i2: Trajectory,
                     psi0: Optional[Trajectory] = None) -> Forcing:
    """b_ii'(t): the three-integral forcing of the second-moment renewal equation."""
    Li, Li2 = model.service_of(i), model.service_of(i2)
    d = model.delta
    Di, Di2 = model.delta_matrix(i), model.delta_matrix(i2)
    Ai, Ai2, Apair = model.mark(Di), model.mark(Di2), model.mark(Di @ Di2)
    psi_at, psi_grid, psi_h = _psi0_source(model, psi0)
    horizon = min(M_i.horizon, M_i2.horizon, psi_h)

    def g(r):
        pair = float(truncated_discount_pair(Li, Li2, d, r, same=(i == i2)))
        return (pair * (Apair @ psi_at(r)) + Li.truncated_discount(d, r) * (Ai @ M_i2.at(r))
                + Li2.truncated_discount(d, r) * (Ai2 @ M_i.at(r)))

    def g_grid(h, n):
        ages = np.arange(n + 1) * h
        pair = np.asarray(truncated_discount_pair(Li, Li2, d, ages, same=(i == i2)), dtype=float)
        pi_ = np.asarray(Li.truncated_discount(d, ages), dtype=float)
        pi2 = np.asarray(Li2.truncated_discount(d, ages), dtype=float)
        return (pair[:, None, None] * (Apair @ psi_grid(h, n)) + pi_[:, None, None] * (Ai @ M_i2.at(ages))
                + pi2[:, None, None] * (Ai2 @ M_i.at(ages)))

    return Forcing(model, g, g_grid, horizon)


# ------------------------------------------------ general-law transient paths

def transient_first_moment_renewal(model: ModelSpec, i: int, T: float, h: float) -> Trajectory:
    return solve_markov_renewal(forcing_b_first(model, i), model, h, T, semantics="first_moment")


def transient_workload_renewal(model: ModelSpec, i: int, T: float, h: float) -> Trajectory:
    return solve_markov_renewal(forcing_workload(model, i), model, h, T, semantics="workload")


def transient_second_moment_renewal(model: ModelSpec, i: int, i2: int, T: float, h: float) -> Trajectory:
    Mi = transient_first_moment_renewal(model, i, T, h)
    Mi2 = Mi if i2 == i else transient_first_moment_renewal(model, i2, T, h)
    return solve_markov_renewal(forcing_b_second(model, i, i2, Mi, Mi2), model, h, T, semantics="second_moment")


def transient_mgf_renewal(model: ModelSpec, s, T: float, h: float) -> Trajectory:
    """psi(s, .) from psi = Fbar I + int G(s, t - y) psi(s, t - y) dF(y)."""
    grid, h = uniform_grid(T, h)
    ev = PiTildeEvaluator(model, s)
    diags = ev.diag(grid)
    if model.marks == "arrival":
        K = model.P[None] * diags[:, None, :]
    else:
        K = diags[:, :, None] * model.P[None]
    surv = model.interarrival.survival(grid)
    b = surv[:, None, None] * np.eye(model.size)[None]
    return solve_markov_renewal(b.astype(K.dtype), model, h, T, kernel=K, semantics="mgf")
