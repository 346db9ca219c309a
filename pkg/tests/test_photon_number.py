import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdsuit.errors import DomainError, TruncationError, UndefinedRatioError
from qkdsuit.photon_number import (
    ChannelModel,
    CoherentSourceModel,
    attenuate,
    bob_suitability_matrix,
    bob_suitability_wcp,
    eve_suitability_matrix,
    eve_suitability_pns,
    gamma_small_alpha,
    number_space,
    pns_leak_ratio,
    poisson_weights,
    truncation_order,
    weak_coherent_density,
)
from qkdsuit.polarization import DEFAULT_PROTOCOL, H, alice_gun_density, polarization_suitability_table
from qkdsuit.qstate import partial_trace

mp.mp.dps = 40


def gamma_oracle(mu):
    m = mp.mpf(mu)
    return float((1 - mp.e ** -m - m * mp.e ** -m) / (1 - mp.e ** -m))


def tail_oracle(mu, n_max):
    m = mp.mpf(mu)
    return 1 - mp.fsum(mp.e ** -m * m ** k / mp.factorial(k) for k in range(n_max + 1))


def test_source_validation():
    with pytest.raises(DomainError):
        CoherentSourceModel(-0.1)
    with pytest.raises(DomainError):
        CoherentSourceModel(float("inf"))
    with pytest.raises(DomainError):
        ChannelModel(eta=1.5)


def test_poisson_weights_vacuum():
    dist = poisson_weights(0.0, 0)
    assert dist.weights.tolist() == [1.0]


def test_poisson_weights_mu_point_one():
    dist = poisson_weights(0.1, 8)
    assert dist.weights[0] == pytest.approx(math.exp(-0.1), rel=1e-15)
    assert dist.weights[0] == pytest.approx(0.904837418035960, rel=1e-14)
    assert dist.weights[1] == pytest.approx(0.0904837418035960, rel=1e-14)


def test_poisson_weights_match_sampling():
    # sampling oracle: empirical frequencies of numpy's Poisson generator
    rng = np.random.default_rng(123)
    n = 2_000_000
    draws = rng.poisson(0.1, n)
    dist = poisson_weights(0.1, truncation_order(0.1))
    for k in (0, 1, 2):
        freq = np.count_nonzero(draws == k) / n
        sd = math.sqrt(dist.weights[k] * (1 - dist.weights[k]) / n)
        assert abs(freq - dist.weights[k]) < 4 * sd


def test_poisson_multiphoton_mass_mu_one():
    dist = poisson_weights(1.0, truncation_order(1.0))
    closed = 1 - 2 * math.exp(-1)
    assert closed == pytest.approx(0.264241117657115, abs=1e-14)
    assert dist.weights[2:].sum() == pytest.approx(closed, abs=1e-12)


def test_poisson_weights_truncation_error():
    with pytest.raises(TruncationError) as err:
        poisson_weights(1.0, 3)
    assert err.value.required_n_max == truncation_order(1.0)


@pytest.mark.parametrize("mu", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_truncation_order_matches_brute_force_tail(mu):
    n = truncation_order(mu, 1e-12)
    assert tail_oracle(mu, n) < 1e-12
    assert n == 0 or tail_oracle(mu, n - 1) >= 1e-12


def test_truncation_order_vacuum_and_frozen_values():
    assert truncation_order(0.0, 1e-3) == 0
    # frozen from the mpmath brute-force tail scan above
    assert [truncation_order(m) for m in (0.1, 0.5, 1.0, 2.0, 5.0)] == [7, 11, 14, 18, 27]


def test_truncation_order_monotone_in_mu():
    orders = [truncation_order(m) for m in np.linspace(0, 10, 101)]
    assert all(a <= b for a, b in zip(orders, orders[1:]))


def test_weak_coherent_density_vacuum():
    rho = weak_coherent_density(CoherentSourceModel(0.0), H.projector())
    assert rho.dimension == 2
    assert rho.allclose([[1, 0], [0, 0]])


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.0, max_value=2.0))
def test_weak_coherent_density_unit_trace(mu):
    rho = weak_coherent_density(CoherentSourceModel(mu), alice_gun_density(DEFAULT_PROTOCOL, 1))
    assert abs(rho.trace() - 1.0) < 1e-12


def test_weak_coherent_number_marginal():
    n_max = truncation_order(0.5)
    rho = weak_coherent_density(CoherentSourceModel(0.5), alice_gun_density(DEFAULT_PROTOCOL, 1), n_max)
    marginal = np.real(np.diag(partial_trace(rho, (n_max + 1, 2), 0)))
    np.testing.assert_allclose(marginal, poisson_weights(0.5, n_max).weights, rtol=0, atol=1e-12)
    assert number_space(n_max).dimension == n_max + 1


def test_bob_suitability_examples():
    src = CoherentSourceModel(0.1)
    assert bob_suitability_wcp(src, DEFAULT_PROTOCOL, 0, 0) == pytest.approx(0.047581290982020, abs=1e-14)
    assert bob_suitability_wcp(src, DEFAULT_PROTOCOL, 0, 1) == 0.0
    assert bob_suitability_wcp(CoherentSourceModel(50.0), DEFAULT_PROTOCOL, 1, 1) == pytest.approx(0.5, abs=1e-15)


def test_eve_suitability_examples():
    assert eve_suitability_pns(CoherentSourceModel(0.0), DEFAULT_PROTOCOL, 0, 0) == 0.0
    assert eve_suitability_pns(CoherentSourceModel(0.1), DEFAULT_PROTOCOL, 0, 0) == pytest.approx(
        0.0023394200802222, abs=1e-15)
    assert eve_suitability_pns(CoherentSourceModel(1.0), DEFAULT_PROTOCOL, 1, 1) == pytest.approx(
        0.132120558828558, abs=1e-14)


@pytest.mark.parametrize("mu", [0.1, 1.0, 0.01, 0.5])
def test_gamma_closed_form_vs_mpmath(mu):
    assert pns_leak_ratio(CoherentSourceModel(mu)) == pytest.approx(gamma_oracle(mu), abs=1e-12)


def test_gamma_frozen_values():
    assert pns_leak_ratio(CoherentSourceModel(1.0)) == pytest.approx(0.418023293130674, abs=1e-12)
    assert pns_leak_ratio(CoherentSourceModel(0.1)) == pytest.approx(0.0491668055224950, abs=1e-12)
    assert pns_leak_ratio(CoherentSourceModel(0.01)) == pytest.approx(0.00499166668055552, abs=1e-12)


def test_gamma_small_mu_tends_to_half_mu():
    # the exact ratio behaves like mu/2, not mu
    assert pns_leak_ratio(CoherentSourceModel(1e-4)) / 1e-4 == pytest.approx(0.5, rel=1e-3)


def test_gamma_undefined_for_vacuum():
    with pytest.raises(UndefinedRatioError):
        pns_leak_ratio(CoherentSourceModel(0.0))


def test_gamma_monotone_and_bounded():
    grid = np.linspace(1e-3, 4.0, 400)
    g = [pns_leak_ratio(CoherentSourceModel(m)) for m in grid]
    assert all(0 <= x < 1 for x in g)
    assert all(a < b for a, b in zip(g, g[1:]))


def test_gamma_small_alpha():
    assert gamma_small_alpha(0.01) == 0.01
    assert gamma_small_alpha(0.0) == 0.0


def test_bob_first_order_consistency():
    src = CoherentSourceModel(1e-4)
    table = polarization_suitability_table(DEFAULT_PROTOCOL).entries
    for i in (0, 1):
        assert bob_suitability_wcp(src, DEFAULT_PROTOCOL, i, i) / 1e-4 == pytest.approx(table[i, i], rel=0.01)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.0, max_value=10.0), st.integers(0, 1), st.integers(0, 1))
def test_eve_never_exceeds_bob(mu, i, j):
    src = CoherentSourceModel(mu)
    assert eve_suitability_pns(src, DEFAULT_PROTOCOL, i, j) <= bob_suitability_wcp(src, DEFAULT_PROTOCOL, i, j)


@pytest.mark.parametrize("mu", [0.05, 0.1, 0.5, 1.0])
def test_matrix_path_matches_closed_form(mu):
    src = CoherentSourceModel(mu)
    for i in (0, 1):
        for j in (0, 1):
            assert abs(bob_suitability_matrix(src, DEFAULT_PROTOCOL, i, j)
                       - bob_suitability_wcp(src, DEFAULT_PROTOCOL, i, j)) < 1e-10
            assert abs(eve_suitability_matrix(src, DEFAULT_PROTOCOL, i, j)
                       - eve_suitability_pns(src, DEFAULT_PROTOCOL, i, j)) < 1e-10


def test_attenuate():
    assert attenuate(CoherentSourceModel(0.2), ChannelModel(0.5)).mu == pytest.approx(0.1)
    assert attenuate(CoherentSourceModel(0.3), ChannelModel(1.0)).mu == 0.3


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 5), st.floats(0, 1), st.floats(0, 1))
def test_attenuate_composes(mu, e1, e2):
    src = CoherentSourceModel(mu)
    twice = attenuate(attenuate(src, ChannelModel(e1)), ChannelModel(e2))
    once = attenuate(src, ChannelModel(e1 * e2))
    assert twice.mu == pytest.approx(once.mu, rel=1e-12, abs=1e-300)
