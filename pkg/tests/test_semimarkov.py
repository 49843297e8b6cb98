import numpy as np
import pytest

from ibnr import (
    Exponential,
    Gamma,
    SemiMarkovSpec,
    Zero,
    embed,
    modulated_first_moment,
    modulated_first_moment_by_last_switch,
    modulated_mgf,
    modulated_second_moment,
    modulated_workload,
    simulate_semimarkov,
    stationary_distribution,
)

from conftest import BASE_P

MIXED = [[Exponential(1.0), Zero()], [Exponential(2.0), Exponential(1.0)]]


def spec(tau=None, service=None, P=BASE_P, delta=0.0):
    return SemiMarkovSpec(2, P, service or MIXED, tau or Exponential(10.0), delta)


def within(a, a_se, b, b_se=None, k=3.0):
    se = np.sqrt(a_se**2 + (0 if b_se is None else b_se**2))
    diff = np.abs(a - b)
    return np.all((diff <= k * se) | (diff < 1e-12))


def test_embedded_chain_structure():
    emb = embed(spec())
    P = emb.model.P
    assert P.shape == (4, 4)
    assert np.all((P > 0).sum(axis=1) == 2)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-15)
    np.testing.assert_allclose(stationary_distribution(P), emb.closed_form_pi(), atol=1e-10)
    assert emb.model.marks == "arrival"


def test_impossible_pairs_are_dropped():
    P = np.array([[0.0, 1.0], [0.4, 0.6]])
    emb = embed(spec(P=P))
    assert (1, 1) not in emb.state_of and emb.model.size == 3
    assert emb.model.k == 4
    res = modulated_first_moment(spec(P=P))
    assert np.all(np.isnan(res.values[0])) and np.all(np.isfinite(res.values[1:]))


def test_ctmc_specialisation_counts_only_switches():
    service = [[Zero(), Exponential(1.0)], [Exponential(1.0), Zero()]]
    res = modulated_first_moment(spec(service=service), 3.0)
    assert not res.values[:, 0].any() and not res.values[:, 3].any()
    assert np.all(res.values[:, 1] > 0)


def test_limit_per_type():
    # rate 10 of jumps, stationary pair probabilities p_Y(l, m) pi_Y(l), mean service
    res = modulated_first_moment(spec())
    np.testing.assert_allclose(res.values, np.tile([1.0, 0.0, 1.5, 3.0], (4, 1)), atol=1e-10)


def test_finite_time_moments_against_direct_simulation():
    sp = spec(Gamma(2.0, 20.0), delta=0.2)
    t = 2.0
    direct = simulate_semimarkov(sp, t, 3000, seed=5)
    for name, fn in [("first", modulated_first_moment), ("second", modulated_second_moment),
                     ("workload", modulated_workload), ("first_by_last", modulated_first_moment_by_last_switch)]:
        res = fn(sp, t)
        mean, se = direct[name]
        assert within(mean, se, res.values), name


def test_embedded_and_direct_simulations_agree():
    sp = spec(delta=0.1)
    emb = modulated_first_moment(sp, 3.0, "simulate", reps=3000, seed=9)
    direct = modulated_first_moment(sp, 3.0, "direct", reps=3000, seed=9)
    assert within(emb.values, emb.stderr, direct.values, direct.stderr)


def test_characteristic_function_split_by_last_jump():
    sp = spec(delta=0.3)
    t = 2.0
    zs = [0.2j, 0.5j, 1.0j, 1.7j, 3.0j]
    direct = simulate_semimarkov(sp, t, 3000, seed=13, zs=zs)
    for z in zs:
        res = modulated_mgf(sp, z, t, form="by-last-switch")
        mean, se = direct[("cf", z)]
        assert within(mean.real, se.real, res.values.real), z
        assert within(mean.imag, se.imag, res.values.imag), z


def test_mgf_forms_are_consistent():
    sp = spec(delta=0.3)
    last_law = modulated_mgf(sp, 0.0, 2.0, form="by-last-switch").values
    # at z = 0 the split is the law of the last jump and sums to one
    np.testing.assert_allclose(last_law.sum(axis=1), 1.0, atol=1e-10)
    np.testing.assert_allclose(modulated_mgf(sp, 0.0, 2.0, form="literal").values, last_law, atol=1e-12)
    np.testing.assert_allclose(modulated_mgf(sp, 0.0, 2.0, form="per-type").values, 1.0, atol=1e-10)
    per_type = modulated_mgf(sp, 0.4j, 2.0, form="per-type").values
    assert np.all(np.abs(per_type) <= 1 + 1e-12)


def test_zero_service_everywhere():
    sp = spec(service=[[Zero(), Zero()], [Zero(), Zero()]])
    assert not np.nan_to_num(modulated_first_moment(sp).values).any()


def test_bad_method():
    with pytest.raises(ValueError):
        modulated_first_moment(spec(), 1.0, "guess")
