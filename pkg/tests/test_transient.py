import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, linalg

from ibnr import (
    CoverageError,
    Deterministic,
    Exponential,
    Gamma,
    PreconditionError,
    QuadratureConfig,
    forcing_b_first,
    forcing_b_second,
    forcing_workload,
    psi_tilde_zero,
    solve_markov_renewal,
    transient_first_moment_poisson,
    transient_mgf_poisson,
    transient_second_moment_poisson,
    transient_workload_poisson,
)
from ibnr.deterministic import transient_first_moment_deterministic, transient_mgf_deterministic
from ibnr.transient import (
    Trajectory,
    discrete_convolution,
    psi_tilde_zero_trajectory,
    renewal_weights,
    transient_first_moment_renewal,
    transient_mgf_renewal,
    transient_second_moment_renewal,
    transient_workload_renewal,
    uniformization_expm,
)

from conftest import (
    base_model,
    poisson_first_moment_oracle,
    poisson_second_moment_oracle,
    renewal_psi0_oracle,
    two_dim_model,
)

POISSON_MODELS = [base_model(Exponential(10.0), "lagged", 0.0), base_model(Exponential(10.0), "arrival", 0.4),
                  two_dim_model(), two_dim_model(marks="lagged", delta=0.0)]


def workload_oracle(model, i, t):
    lam = 1.0 / model.interarrival.mean()
    A = lam * (model.P - np.eye(model.size))
    D = model.mark(model.delta_matrix(i))
    L = model.service_of(i)
    f = lambda u: lam * linalg.expm(A * u) @ D @ linalg.expm(A * (t - u)) * L.residual_expectation(t - u)
    return integrate.quad_vec(f, 0.0, t, epsabs=1e-12, epsrel=1e-12)[0]


@pytest.mark.parametrize("x", [0.0, 0.01, 1.3, 25.0, 400.0])
def test_uniformization_matches_expm(x):
    P = two_dim_model().P
    np.testing.assert_allclose(uniformization_expm(P, x), linalg.expm(x * (P - np.eye(4))), atol=1e-13)


@pytest.mark.parametrize("tau", [Exponential(3.0), Gamma(0.75, 15.0), Gamma(2.0, 4.0), Deterministic(0.5)], ids=repr)
def test_psi_zero_row_stochastic(tau):
    model = base_model(tau)
    traj = psi_tilde_zero_trajectory(model, 3.0, 1e-3)
    assert np.max(np.abs(traj.values.sum(axis=2) - 1)) < 1e-10
    assert traj.values.min() >= -1e-12


@pytest.mark.parametrize("tau", [Gamma(0.75, 15.0), Gamma(2.0, 4.0), Exponential(3.0)], ids=repr)
def test_psi_zero_against_gamma_series(tau):
    model = two_dim_model(tau)
    for r in (0.2, 1.0, 2.5):
        np.testing.assert_allclose(psi_tilde_zero(model, r), renewal_psi0_oracle(tau, model.P, r), atol=5e-6)


@pytest.mark.parametrize("model", POISSON_MODELS)
@pytest.mark.parametrize("t", [0.3, 1.5])
def test_first_moment_poisson_against_literal_integral(model, t):
    for i in range(1, model.k + 1):
        np.testing.assert_allclose(transient_first_moment_poisson(model, i, t), poisson_first_moment_oracle(model, i, t),
                                   atol=1e-10)


@pytest.mark.parametrize("model", POISSON_MODELS[:2])
def test_second_moment_poisson_against_nested_integral(model):
    t = 0.6
    np.testing.assert_allclose(transient_second_moment_poisson(model, 1, 1, t),
                               poisson_second_moment_oracle(model, 1, t), atol=1e-9)


@pytest.mark.parametrize("model", POISSON_MODELS)
def test_workload_poisson_against_literal_integral(model):
    np.testing.assert_allclose(transient_workload_poisson(model, 1, 1.2), workload_oracle(model, 1, 1.2), atol=1e-10)


@pytest.mark.parametrize("model", POISSON_MODELS)
def test_mgf_derivative_is_first_moment(model):
    eps, t = 1e-5, 1.5
    for i in range(1, model.k + 1):
        e = np.zeros(model.k)
        e[i - 1] = eps
        fd = (transient_mgf_poisson(model, e, t) - transient_mgf_poisson(model, -e, t)) / (2 * eps)
        M = transient_first_moment_poisson(model, i, t)
        assert np.all(np.abs(fd - M) <= 1e-5 * (1 + np.abs(M)))


def test_mgf_at_zero_is_psi_zero():
    model = two_dim_model()
    np.testing.assert_allclose(transient_mgf_poisson(model, [0.0, 0.0], 2.0), psi_tilde_zero(model, 2.0), atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 3))
def test_mgf_imaginary_rows_bounded(a, b, t):
    psi = transient_mgf_poisson(two_dim_model(), [1j * a, 1j * b], t, QuadratureConfig(ode_step=0.01))
    assert np.all(np.abs(psi.sum(axis=1)) <= 1 + 1e-9)


@pytest.mark.parametrize("model", POISSON_MODELS)
def test_renewal_cross_oracle_first_moment(model):
    ode = transient_first_moment_poisson(model, 1, 2.0, QuadratureConfig(ode_step=1e-3), trajectory=True)
    ren = solve_markov_renewal(forcing_b_first(model, 1), model, 1e-3, 2.0)
    assert np.max(np.abs(ode.values - ren.values)) < 5e-4


@pytest.mark.parametrize("model", POISSON_MODELS[1:3])
def test_renewal_cross_oracle_second_moment_and_workload(model):
    h = 1e-3
    Mi = transient_first_moment_renewal(model, 1, 2.0, h)
    ren = solve_markov_renewal(forcing_b_second(model, 1, 1, Mi, Mi), model, h, 2.0)
    ode = transient_second_moment_poisson(model, 1, 1, 2.0, trajectory=True)
    assert np.max(np.abs(ode.values - ren.values)) < 5e-4
    wl = solve_markov_renewal(forcing_workload(model, 1), model, h, 2.0)
    assert np.max(np.abs(transient_workload_poisson(model, 1, 2.0, trajectory=True).values - wl.values)) < 5e-4


def test_renewal_mgf_matches_poisson_ode():
    model = two_dim_model()
    for s in ([0.3, -0.2], [0.5j, 1.1j]):
        ren = transient_mgf_renewal(model, s, 2.0, 1e-3).final
        assert np.max(np.abs(ren - transient_mgf_poisson(model, s, 2.0))) < 5e-4


@pytest.mark.parametrize("marks", ["arrival", "lagged"])
def test_renewal_reproduces_lattice_products(marks):
    model = base_model(Deterministic(1.0), marks, 0.3)
    traj = transient_first_moment_renewal(model, 1, 5.0, 0.05)
    for t in range(1, 6):
        np.testing.assert_allclose(traj.at(float(t)), transient_first_moment_deterministic(model, 1, t), atol=1e-12)
    mgf = transient_mgf_renewal(model, [0.4], 4.0, 0.05)
    np.testing.assert_allclose(mgf.final, transient_mgf_deterministic(model, [0.4], 4), atol=1e-12)


def test_renewal_second_moment_consistent_with_mgf():
    model = base_model(Gamma(2.0, 8.0), "arrival", 0.2)
    eps, h, T = 1e-3, 2e-3, 1.5
    M2 = transient_second_moment_renewal(model, 1, 1, T, h).final
    plus = transient_mgf_renewal(model, [eps], T, h).final
    zero = transient_mgf_renewal(model, [0.0], T, h).final
    minus = transient_mgf_renewal(model, [-eps], T, h).final
    np.testing.assert_allclose((plus - 2 * zero + minus) / eps**2, M2, atol=2e-5)


def test_renewal_gamma_reaches_limit():
    from ibnr import limit_first_moment_joint

    # psi(0, r) ~ I + F(r)(P - I) has an r^0.75 cusp at 0, so the error here is O(h^1.75)
    model = base_model(Gamma(0.75, 15.0))
    np.testing.assert_allclose(transient_first_moment_renewal(model, 1, 20.0, 1e-3).final,
                               limit_first_moment_joint(model, 1), atol=1e-4)
    w = transient_workload_renewal(model, 1, 20.0, 1e-3).final
    np.testing.assert_allclose(w.sum(axis=1), 1.0 / model.interarrival.mean() * 0.6, atol=1e-4)


def test_renewal_weights_sum_to_cdf():
    tau = Gamma(0.75, 15.0)
    a, b = renewal_weights(tau, 0.01, 50)
    assert abs(a[1:].sum() + b[1:].sum() - tau.cdf(0.5)) < 1e-14
    with pytest.raises(PreconditionError):
        renewal_weights(Deterministic(1.0), 0.3, 10)


def test_discrete_convolution_against_quadrature():
    tau = Gamma(2.0, 3.0)
    h, n = 1e-3, 1500
    g = np.cos(np.arange(n + 1) * h)[:, None, None] * np.ones((1, 2, 2))
    conv = discrete_convolution(tau, g, h)
    t = n * h
    want = integrate.quad(lambda u: np.cos(t - u) * 9 * u * np.exp(-3 * u), 0, t)[0]
    assert abs(conv[-1, 0, 0] - want) < 1e-6


def test_forcing_pointwise_matches_grid():
    model = base_model(Exponential(5.0), "arrival", 0.3)
    f = forcing_b_first(model, 1)
    grid = f.on_grid(1e-3, 1000)
    np.testing.assert_allclose(grid[-1], f(1.0), atol=1e-6)


def test_convergence_orders():
    model = base_model(Gamma(2.0, 8.0), "arrival", 0.2)
    ren = [transient_first_moment_renewal(model, 1, 1.0, h).final for h in (0.02, 0.01, 0.005)]
    order = np.log2(np.max(np.abs(ren[0] - ren[1])) / np.max(np.abs(ren[1] - ren[2])))
    assert 1.8 < order < 2.3
    pm = base_model(Exponential(10.0), "arrival", 0.3)
    ode = [transient_first_moment_poisson(pm, 1, 1.0, QuadratureConfig(ode_step=s)) for s in (0.1, 0.05, 0.025)]
    order = np.log2(np.max(np.abs(ode[0] - ode[1])) / np.max(np.abs(ode[1] - ode[2])))
    assert 3.7 < order < 4.4


def test_trajectory_refuses_extrapolation():
    traj = Trajectory(np.linspace(0, 1, 11), np.zeros((11, 2, 2)), "first_moment")
    with pytest.raises(CoverageError):
        traj.at(1.5)
    f = forcing_b_second(base_model(Exponential(10.0)), 1, 1, traj, traj)
    with pytest.raises(CoverageError):
        f.on_grid(0.1, 20)


def test_poisson_routines_need_exponential_interarrivals():
    with pytest.raises(PreconditionError):
        transient_first_moment_poisson(base_model(Gamma(0.75, 15.0)), 1, 1.0)
    # Gamma with shape one is the exponential law
    np.testing.assert_allclose(transient_first_moment_poisson(base_model(Gamma(1.0, 10.0)), 1, 1.0),
                               transient_first_moment_poisson(base_model(Exponential(10.0)), 1, 1.0))
