import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from squeezewell.acceptance import random_reflection_tensor
from squeezewell.fockspace import assemble_HN
from squeezewell.twomode import (TwoModeSector, assemble_H2mode, assemble_H2mode_rewritten,
                                 assemble_HBH, bose_hubbard_closed_form, choose_sigma2,
                                 coefficients_from_arrays, coherent_split_state, gaussian_expectations,
                                 gaussian_state, sector_spectrum, sector_squeezing,
                                 square_identity_sides, two_mode_constants)


def _random(seed):
    return random_reflection_tensor(np.random.default_rng(seed))


@given(st.integers(0, 40))
def test_sector_dimension(N):
    S = TwoModeSector(N)
    assert S.dimension == N + 1
    assert S.identity().shape == (N + 1, N + 1)


def test_zero_coupling_is_hopping_only():
    h, w = _random(1)
    N = 7
    H = assemble_H2mode(N, h, w, 0.0).toarray()
    S = TwoModeSector(N)
    expected = h[0, 0] * N * np.eye(N + 1) + h[0, 1] * S.hopping().toarray()
    assert np.max(np.abs(H - expected)) <= 1e-13
    E = sector_spectrum(assemble_H2mode(N, h, w, 0.0), 1)[0][0]
    assert E == pytest.approx(eigh(H, eigvals_only=True)[0], abs=1e-12)
    assert E == pytest.approx(N * (h[0, 0] - abs(h[0, 1])), abs=1e-12)


def test_two_particle_matrix_by_hand():
    h, w = _random(2)
    lam = 0.8
    H = assemble_H2mode(2, h, w, lam).toarray()  # basis (2,0), (1,1), (0,2)
    r2 = math.sqrt(2)
    hand = np.array([
        [2 * h[0, 0] + lam * w[0, 0, 0, 0], r2 * (h[0, 1] + lam * w[0, 0, 0, 1]), lam * w[0, 0, 1, 1]],
        [0, h[0, 0] + h[1, 1] + lam * (w[0, 1, 0, 1] + w[0, 1, 1, 0]), r2 * (h[0, 1] + lam * w[1, 1, 1, 0])],
        [0, 0, 2 * h[1, 1] + lam * w[1, 1, 1, 1]],
    ])
    hand = hand + np.triu(hand, 1).T
    assert np.max(np.abs(H - hand)) <= 1e-13


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
def test_matches_full_fock_on_two_modes(N, seed):
    h, w = _random(seed)
    A = assemble_H2mode(N, h, w, 0.37)
    B, basis = assemble_HN(h, w, 0.37, N)
    # both order states with n1 descending
    assert [tuple(s) for s in basis.states] == [(N - i, i) for i in range(N + 1)]
    assert abs(A - B).max() <= 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2 ** 32 - 1), st.floats(0.0, 2.0))
def test_rewriting_identity_random(N, seed, lam):
    h, w = _random(seed)
    c = coefficients_from_arrays(h, w)
    A = assemble_H2mode(N, h, w, lam)
    B = assemble_H2mode_rewritten(N, two_mode_constants(c, lam, N), c["w1122"])
    assert abs(A - B).max() <= 1e-10


def test_rewriting_identity_physical(ref_stage):
    st_ = ref_stage
    c = coefficients_from_arrays(st_.tensor.h, st_.tensor.w)
    half_gap = 0.5 * (st_.mu_plus - st_.mu_minus)
    for N in (2, 5, 12, 100):
        k = two_mode_constants(c, st_.lam, N, half_gap=half_gap)
        A = assemble_H2mode(N, st_.tensor.h, st_.tensor.w, st_.lam)
        B = assemble_H2mode_rewritten(N, k, c["w1122"])
        assert abs(A - B).max() <= 1e-10 * max(1, N / 10)


def test_hopping_prefactor_on_sector():
    h, w = _random(3)
    c = coefficients_from_arrays(h, w)
    N, lam = 6, 0.5
    k = two_mode_constants(c, lam, N, half_gap=-0.125)
    assert k.tunnel_on_sector() == pytest.approx(-0.125 + lam * c["w1122"] / (N - 1), abs=1e-15)


@pytest.mark.parametrize("N", range(1, 13))
def test_square_identity(N):
    l, r = square_identity_sides(TwoModeSector(N))
    assert abs(l - r).max() <= 1e-10


def test_bose_hubbard_zero_coupling():
    N = 50
    E = sector_spectrum(assemble_HBH(N, 1.0, 0.3, 0.31, 0.0), 1)[0][0]
    assert E == pytest.approx(N * (0.3 - 0.31) / 2, abs=1e-10 * N)


@pytest.mark.parametrize("N,expected", [(10, 0.0), (11, 1.0)])
def test_bose_hubbard_no_tunneling_balanced(N, expected):
    S = TwoModeSector(N)
    vals, vecs = sector_spectrum(assemble_HBH(N, 1.0, 0.5, 0.5, 0.4, S), 2)
    assert sector_squeezing(vecs[:, 0], S)["variance"] == pytest.approx(expected, abs=1e-10)
    if N % 2:
        # both parity sectors: d = +1 and d = -1 are degenerate
        assert vals[1] - vals[0] == pytest.approx(0.0, abs=1e-12)


def test_closed_form_residual_shrinks_with_N():
    res = []
    for N in (250, 500, 1000):
        T = float(N) ** -2
        E = sector_spectrum(assemble_HBH(N, 1.0, 0.0, T, 0.4), 1)[0][0]
        res.append(abs(E - bose_hubbard_closed_form(N, 1.0, 0.0, T, 0.4)))
    assert res[0] > res[1] > res[2]


def test_variance_nonincreasing_in_interaction():
    N, S = 200, TwoModeSector(200)
    var = []
    for lam in np.linspace(0.05, 2.0, 12):
        v = sector_spectrum(assemble_HBH(N, 1.0, 0.0, 1e-3, lam, S), 1)[1][:, 0]
        var.append(sector_squeezing(v, S)["variance"])
    assert all(b <= a * (1 + 1e-10) for a, b in zip(var, var[1:]))


def test_squeezing_at_large_N():
    N = 1000
    S = TwoModeSector(N)
    out = []
    for T in (1e-2, 1e-3, 1e-4):
        v = sector_spectrum(assemble_HBH(N, 1.0, 0.0, T, 0.4, S), 1)[1][:, 0]
        out.append(sector_squeezing(v, S)["variance_over_N"])
    assert out[0] > out[1] > out[2]
    assert out[-1] < 0.05


def test_coherent_split_state_is_binomial():
    for N in (10, 101):
        S = TwoModeSector(N)
        v = coherent_split_state(S)
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
        q = sector_squeezing(v, S)
        assert q["variance_over_N"] == pytest.approx(1.0, abs=1e-10)
        assert q["N1"] == pytest.approx(N / 2, abs=1e-8 * N)


# -- Gaussian states ----------------------------------------------------------

def test_narrow_gaussian_is_balanced():
    g = gaussian_state(10, 1.0)
    assert g.d.tolist() == [0]
    assert g.coefficient(0) == pytest.approx(1.0)


@pytest.mark.parametrize("sigma2", [16, 64, 256])
def test_gaussian_moments(sigma2):
    N = 10_000
    e = gaussian_expectations(gaussian_state(N, sigma2))
    assert abs(e["difference_first_moment"]) <= 1e-14
    assert abs(e["difference_third_moment"]) <= 1e-14
    assert abs(e["tunneling_sum_2"] - 1) <= 4 / sigma2
    assert 0.3 <= e["difference_sq"] / sigma2 <= 1.1
    assert e["norm"] == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(20, 3000), st.floats(2.0, 300.0), st.integers(0, 3))
def test_gaussian_invariants(N, sigma2, s):
    g = gaussian_state(N, sigma2, excited=s)
    assert np.all((N - s + g.d) % 2 == 0)
    assert np.all(np.abs(g.d) <= min(sigma2, N - s))
    assert np.sum(g.coefficients ** 2) == pytest.approx(1.0, abs=1e-13)
    assert np.allclose(g.coefficients, g.coefficients[::-1], rtol=0, atol=0)


@pytest.mark.parametrize("N", [100, 1000, 10_000])
def test_gaussian_hopping_bound(N):
    for sigma2 in (4, 16, 64, 256):
        e = gaussian_expectations(gaussian_state(N, sigma2))
        bound = 1 + N / sigma2 + N * math.exp(-N / sigma2)
        # measured ratio stays below 0.6 over this grid
        assert abs(e["hopping"] - N) <= bound


def test_gaussian_difference_operator_exact():
    N = 400
    g = gaussian_state(N, 30.0)
    S = TwoModeSector(N)
    v = g.sector_vector(S)
    D = S.difference()
    direct = float(v @ (D @ (D @ v)))
    assert direct == pytest.approx(float(np.sum(g.d ** 2 * g.coefficients ** 2)), rel=1e-13)
    e = gaussian_expectations(g)
    assert e["hopping"] == pytest.approx(e["hopping_quadratic_form"], rel=1e-12)


def test_sigma_selection():
    assert choose_sigma2(100, 0.04, 1.5) == pytest.approx(20.0)
    assert choose_sigma2(100, 0.04, 2.5, constant=3.0) == 3.0
    assert choose_sigma2(100, 0.04, 1.5, rule="delta1") == pytest.approx(10.0)
    with pytest.raises(ValueError):
        choose_sigma2(100, 0.04, 1.0, rule="other")


def test_variational_ordering(ref_stage):
    st_ = ref_stage
    c = coefficients_from_arrays(st_.tensor.h, st_.tensor.w)
    assert c["w1122"] >= 0 and c["w1212"] >= 0
    for N in (10, 100, 1000):
        E = sector_spectrum(assemble_H2mode(N, st_.tensor.h, st_.tensor.w, st_.lam), 1)[0][0]
        k = two_mode_constants(c, st_.lam, N, half_gap=0.5 * (st_.mu_plus - st_.mu_minus))
        assert E >= k.E0 + k.E_w + N * (st_.mu_plus - st_.mu_minus) / 2 - 1e-10 * N
        for sigma2 in (1.0, 4.0, 16.0):
            g = gaussian_expectations(gaussian_state(N, sigma2), st_.tensor.h, st_.tensor.w, st_.lam)
            assert E <= g["energy"] + 1e-10 * N


def test_reflection_symmetric_ground_state(ref_stage):
    st_ = ref_stage
    N = 1000
    S = TwoModeSector(N)
    v = sector_spectrum(assemble_H2mode(N, st_.tensor.h, st_.tensor.w, st_.lam, S), 1)[1][:, 0]
    q = sector_squeezing(v, S)
    assert q["N1"] == pytest.approx(N / 2, abs=1e-8 * N)
    assert q["N2"] == pytest.approx(N / 2, abs=1e-8 * N)
