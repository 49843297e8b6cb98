import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ibnr import (
    ChainSpec,
    IrreducibilityError,
    StateSpaceTooLarge,
    StochasticityError,
    chain_product_expectation,
    delta_matrix,
    enumerate_states,
    restricted_space,
    stationary_distribution,
)
from ibnr.statespace import is_aperiodic


@st.composite
def chains(draw, max_states=4):
    k = draw(st.integers(1, 2))
    K = draw(st.integers(1, 3 if k == 1 else 1))
    space = enumerate_states(k, K)
    S = space.size
    raw = draw(arrays(float, (S, S), elements=st.floats(0.05, 1.0)))
    P = raw / raw.sum(axis=1, keepdims=True)
    return ChainSpec(space, P)


def brute_force_product(chain, weights):
    """Sum over every path S_1..S_l of the weighted path probability."""
    S = chain.size
    l = len(weights)
    out = np.zeros((S, S))
    for x in range(S):
        for rest in itertools.product(range(S), repeat=l - 1):
            path = (x,) + rest
            prob = np.prod([chain.P[a, b] for a, b in zip(path[:-1], path[1:])])
            w = np.prod([weights[m][path[m]] for m in range(l)])
            out[x, path[-1]] += prob * w
    return out


def test_enumeration_order_and_size():
    space = enumerate_states(2, 2)
    assert space.size == 9
    assert space.states[:4] == ((0, 0), (0, 1), (0, 2), (1, 0))
    assert space.label(5) == "(1,2)"


def test_state_cap():
    with pytest.raises(StateSpaceTooLarge):
        enumerate_states(13, 1)
    assert enumerate_states(3, 3, cap=64).size == 64


def test_delta_matrix_integer_entries():
    space = enumerate_states(2, 3)
    for i in (1, 2):
        D = delta_matrix(space, i)
        d = np.diag(D)
        assert np.all(d == np.round(d)) and d.min() == 0 and d.max() == 3
        assert np.count_nonzero(D - np.diag(d)) == 0


def test_stationary_distribution_paper_chain():
    pi = stationary_distribution([[0.25, 0.75], [0.5, 0.5]])
    np.testing.assert_allclose(pi, [0.4, 0.6], atol=1e-14)


def test_reducible_chain_rejected():
    with pytest.raises(IrreducibilityError):
        stationary_distribution([[1.0, 0.0], [0.5, 0.5]])


def test_non_stochastic_rows_rejected():
    with pytest.raises(StochasticityError) as info:
        ChainSpec(enumerate_states(1, 1), np.array([[0.5, 0.6], [0.5, 0.5]]))
    assert info.value.row == 0
    with pytest.raises(StochasticityError):
        ChainSpec(enumerate_states(1, 1), np.array([[1.2, -0.2], [0.5, 0.5]]))


def test_aperiodicity():
    assert not is_aperiodic(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert is_aperiodic(np.array([[0.25, 0.75], [0.5, 0.5]]))


def test_restricted_space_keeps_given_order():
    space = restricted_space(2, 1, [(1, 0), (0, 1)])
    assert space.restricted and space.states == ((1, 0), (0, 1))


@settings(max_examples=40, deadline=None)
@given(chains(), st.integers(0, 6))
def test_all_ones_product_is_matrix_power(chain, n):
    ones = [np.ones(chain.size)] * (n + 1)
    out = chain_product_expectation(chain, ones)
    np.testing.assert_allclose(out, np.linalg.matrix_power(chain.P, n), atol=1e-12)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(chains(), st.integers(1, 5), st.data())
def test_product_matches_path_enumeration(chain, l, data):
    weights = [data.draw(arrays(float, chain.size, elements=st.floats(-2, 2))) for _ in range(l)]
    np.testing.assert_allclose(chain_product_expectation(chain, weights),
                               brute_force_product(chain, weights), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(chains())
def test_stationary_vector_is_invariant(chain):
    np.testing.assert_allclose(chain.pi @ chain.P, chain.pi, atol=1e-12)
    assert abs(chain.pi.sum() - 1) < 1e-12


def test_callable_weights():
    chain = ChainSpec(enumerate_states(1, 2), np.full((3, 3), 1 / 3))
    out = chain_product_expectation(chain, [lambda x: 1.0, lambda x: x[0]])
    np.testing.assert_allclose(out, np.tile([0, 1 / 3, 2 / 3], (3, 1)), atol=1e-15)
