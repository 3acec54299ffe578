import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from squeezewell.fockspace import (ExcitationSpace, FockOperatorSet, SizingError, assemble_HN,
                                   enumerate_basis, excitation_inverse, excitation_map, ground_state,
                                   hermiticity_defect, sector_dimension, verify_conjugation_identities)
from squeezewell.hartree import hartree_energy
from squeezewell.modes import compute_coefficient_tensor, symmetrize_tensor


def test_basis_counts():
    assert enumerate_basis(0, 3).dimension == 1
    assert enumerate_basis(3, 4).dimension == 20
    b = enumerate_basis(2, 2)
    assert {tuple(s) for s in b.states} == {(2, 0), (1, 1), (0, 2)}


@given(st.integers(0, 7), st.integers(1, 5))
def test_dimension_matches_stars_and_bars(N, M):
    b = enumerate_basis(N, M)
    assert b.dimension == sector_dimension(N, M) == math.comb(N + M - 1, M - 1)
    assert np.all(b.states.sum(axis=1) == N)
    assert np.array_equal(b.index_of(b.states), np.arange(b.dimension))


def test_index_of_unknown_state():
    b = enumerate_basis(3, 3)
    assert b.index_of([[1, 1, 0]])[0] == -1
    with pytest.raises(KeyError):
        b.index([4, 0, 0])


def test_sizing_cap():
    with pytest.raises(SizingError) as err:
        enumerate_basis(10, 10, cap=1000)
    assert err.value.dimension == math.comb(19, 9)


@pytest.mark.parametrize("M,N", [(1, 5), (2, 4), (3, 4)])
def test_ccr_below_top_sector(M, N):
    # sqrt(n) * sqrt(n) rounds to n within an ulp or two
    assert FockOperatorSet(M, N).ccr_defect() <= 4 * N * np.finfo(float).eps


def test_single_mode_pair():
    h = np.array([[0.7]])
    w = np.array([[[[1.3]]]])
    H, b = assemble_HN(h, w, 0.4, 2)
    assert b.dimension == 1
    assert H.toarray()[0, 0] == pytest.approx(2 * 0.7 + 0.4 * 1.3, abs=1e-14)


def test_operator_symmetrization_is_invisible():
    rng = np.random.default_rng(11)
    M = 3
    h = rng.standard_normal((M, M))
    h = h + h.T
    w = rng.standard_normal((M,) * 4)
    # average over the symmetries of a_m^dag a_n^dag a_p a_q and hermiticity
    s = w + w.transpose(1, 0, 2, 3)
    s = s + s.transpose(0, 1, 3, 2)
    s = s + s.transpose(3, 2, 1, 0)
    s /= 8
    A, _ = assemble_HN(h, w, 0.6, 4)
    B, _ = assemble_HN(h, s, 0.6, 4)
    assert abs(A - B).max() <= 1e-12


def test_grid_tensor_raw_and_symmetrized_agree(ref_stage):
    st_ = ref_stage
    raw = compute_coefficient_tensor(st_.basis, st_.kernel, st_.grid, st_.params, symmetrize=False)
    A, _ = assemble_HN(raw.h[:4, :4], raw.w[:4, :4, :4, :4], st_.lam, 4)
    B, _ = assemble_HN(st_.tensor.h[:4, :4], st_.tensor.w[:4, :4, :4, :4], st_.lam, 4)
    assert abs(A - B).max() <= 1e-12


def test_product_state_energy(ref_stage):
    st_ = ref_stage
    pm = compute_coefficient_tensor(st_.basis, st_.kernel, st_.grid, st_.params, which="pm").restricted(4)
    N = 5
    H, b = assemble_HN(pm.h, pm.w, st_.lam, N)
    i = b.index([N, 0, 0, 0])
    E_H = hartree_energy(st_.grid, st_.params, st_.kernel, st_.basis.u_plus)
    assert H[i, i] == pytest.approx(N * E_H, abs=1e-8)


def test_hermitian_and_reflection_covariant(ref_stage):
    st_ = ref_stage
    H, b = assemble_HN(st_.tensor.h, st_.tensor.w, st_.lam, 3)
    assert hermiticity_defect(H) <= 1e-12
    perm = np.arange(st_.basis.cutoff).reshape(-1, 2)[:, ::-1].ravel()  # u1<->u2, r<->l
    idx = b.index_of(b.states[:, perm])
    P = sp.csr_matrix((np.ones(b.dimension), (idx, np.arange(b.dimension))))
    assert abs(P @ H @ P.T - H).max() <= 1e-10


def test_lanczos_trivial_cases():
    D = sp.diags([3.0, -1.5, 2.0, 0.25, 7.0])
    assert ground_state(D).energy == pytest.approx(-1.5, abs=1e-12)
    assert ground_state(sp.csr_matrix([[0.0, 1.0], [1.0, 0.0]])).energy == pytest.approx(-1.0)


@settings(max_examples=10, deadline=None)
@given(st.integers(10, 400), st.integers(0, 2 ** 32 - 1))
def test_lanczos_matches_dense(dim, seed):
    rng = np.random.default_rng(seed)
    A = sp.random(dim, dim, density=min(1.0, 8 / dim), random_state=rng)
    A = (A + A.T + sp.diags(rng.standard_normal(dim))).tocsr()
    gs = ground_state(A, tol=1e-12)
    ref = eigh(A.toarray(), eigvals_only=True, subset_by_index=(0, 0))[0]
    assert gs.energy == pytest.approx(ref, abs=1e-10 * max(1.0, abs(ref)))


def test_lanczos_deterministic(ref_stage):
    H, _ = assemble_HN(ref_stage.tensor.h, ref_stage.tensor.w, ref_stage.lam, 4)
    a, b = ground_state(H), ground_state(H)
    assert a.energy == b.energy and np.array_equal(a.vector, b.vector)
    assert not a.degenerate


def test_lanczos_flags_degeneracy():
    D = sp.diags([1.0, 1.0, 2.0, 3.0, 4.0])
    assert ground_state(D).degenerate


def test_full_fock_ground_state_statistics(ref_stage):
    N = 4
    H, b = assemble_HN(ref_stage.tensor.h, ref_stage.tensor.w, ref_stage.lam, N)
    gs = ground_state(H)
    p = gs.vector ** 2
    d = b.states[:, 0] - b.states[:, 1]
    var = float(p @ (d * d))
    assert 0 <= var <= N * N
    assert abs(float(p @ d)) <= 1e-8 * N


# -- excitation map -----------------------------------------------------------

def test_condensate_in_u1():
    b = enumerate_basis(4, 4)
    psi = np.zeros(b.dimension)
    psi[b.index([4, 0, 0, 0])] = 1.0
    norms = excitation_map(psi, b).norms()
    assert norms == {(0, 4): 1.0}


def test_symmetric_pair_binomial_weights():
    b = enumerate_basis(2, 3)
    psi = np.zeros(b.dimension)
    psi[b.index([2, 0, 0])] = 0.5
    psi[b.index([1, 1, 0])] = math.sqrt(0.5)
    psi[b.index([0, 2, 0])] = 0.5
    norms = excitation_map(psi, b).norms()
    assert norms == pytest.approx({(0, 2): 0.25, (0, 0): 0.5, (0, -2): 0.25})


def test_single_excitation_lands_in_s1():
    b = enumerate_basis(3, 4)
    rng = np.random.default_rng(2)
    psi = np.zeros(b.dimension)
    mask = b.states[:, 2:].sum(axis=1) == 1
    psi[mask] = rng.standard_normal(mask.sum())
    assert {s for s, _ in excitation_map(psi, b).norms()} == {1}


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 5), st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_round_trip_and_norm(N, M_exc, seed):
    b = enumerate_basis(N, M_exc + 2)
    psi = np.random.default_rng(seed).standard_normal(b.dimension)
    rep = excitation_map(psi, b)
    assert sum(rep.norms().values()) == pytest.approx(float(psi @ psi), rel=1e-12)
    assert np.array_equal(excitation_inverse(rep, b), psi)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_conjugation_identities(N):
    rep = verify_conjugation_identities(N, 3)
    assert rep["max_defect"] <= 1e-10


@settings(max_examples=6, deadline=None)
@given(st.integers(1, 4), st.integers(1, 2))
def test_conjugation_identities_property(N, M_exc):
    assert verify_conjugation_identities(N, M_exc)["max_defect"] <= 1e-10


def test_shift_window_edge_convention():
    space = ExcitationSpace(2, 1)
    Th = space.shift()
    v = np.zeros(space.dimension)
    v[space.offset(0, space.d_max)] = 1.0
    assert np.all(Th @ v == 0)  # pushed past the window: dropped
    assert np.array_equal(Th.T @ (Th @ (Th.T @ v)), Th.T @ v)
