import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import eigh

from squeezewell.hartree import (ConvergenceError, DoubleWellParams, GridSpec, InteractionKernel,
                                 agmon_distance, assemble_linear_hamiltonian, convolve,
                                 evaluate_potential, hartree_energy, hartree_minimize, inner,
                                 interaction_energy, l1_density_difference, mean_field_spectrum,
                                 trapezoid_weights, tunneling_parameter, verify_onebody_properties)


# -- potential, Agmon distance, tunneling ------------------------------------

def test_potential_values():
    p2 = DoubleWellParams(4.0, 2)
    assert evaluate_potential(np.array([2.0, -2.0]), p2) == pytest.approx([0.0, 0.0])
    assert evaluate_potential(0.0, p2) == pytest.approx(4.0)
    assert evaluate_potential(3.0, DoubleWellParams(4.0, 3)) == pytest.approx(1.0)


@given(st.floats(0.5, 20), st.sampled_from([2, 4, 6]))
def test_potential_vanishes_at_well_bottoms(L, s):
    p = DoubleWellParams(L, s)
    assert evaluate_potential(np.array([L / 2, -L / 2]), p) == pytest.approx([0, 0], abs=1e-12)


@given(st.floats(-10, 10), st.floats(0.5, 20), st.sampled_from([2, 4]))
def test_potential_is_even(x, L, s):
    p = DoubleWellParams(L, s)
    assert evaluate_potential(x, p) == evaluate_potential(-x, p)


def test_agmon_distance_values():
    assert agmon_distance(0.0, 2) == 0.0
    assert agmon_distance(2.0, 2) == pytest.approx(2.0)
    assert agmon_distance(1.0, 4) == pytest.approx(1 / 3)


def test_tunneling_values():
    assert tunneling_parameter(4.0, 2) == pytest.approx(math.exp(-4), rel=1e-14)
    assert tunneling_parameter(4.0, 2) == pytest.approx(1.8316e-2, rel=1e-4)
    assert tunneling_parameter(8.0, 2) == pytest.approx(math.exp(-16), rel=1e-14)
    assert tunneling_parameter(1e-9, 2) == pytest.approx(1.0)


@given(st.floats(0.1, 6), st.floats(0.01, 1), st.sampled_from([2, 4, 6]))
def test_tunneling_decreasing_in_L(L, dL, s):
    assert tunneling_parameter(L + dL, s) < tunneling_parameter(L, s)


@given(st.floats(2, 6), st.floats(0.01, 1), st.floats(0.05, 2))
def test_tunneling_decreasing_in_s_beyond_threshold(s, ds, extra):
    # d/dp (r^p / p) > 0 iff r > e^{1/p}, p = 1 + s/2, r = L/2
    L = 2 * math.exp(1 / (1 + s / 2)) + extra
    assert tunneling_parameter(L, s + ds) < tunneling_parameter(L, s)


def test_tunneling_not_monotone_in_s_just_above_weaker_threshold():
    # between 2*sqrt(2) and 3 the s=2 -> s=4 comparison still goes the other way
    L = 2.9
    assert L > 2 * 2 ** 0.5
    assert tunneling_parameter(L, 4) > tunneling_parameter(L, 2)


def test_params_validation():
    with pytest.raises(ValueError):
        DoubleWellParams(-1.0)
    with pytest.raises(ValueError):
        DoubleWellParams(1.0, exponent=1)
    with pytest.raises(ValueError):
        DoubleWellParams(1.0, coupling=-0.1)
    with pytest.raises(ValueError):
        GridSpec(5.0, 100)


# -- grid and finite differences ---------------------------------------------

def test_grid_is_symmetric_bitwise():
    g = GridSpec(11.0, 2001)
    x = g.nodes
    assert np.array_equal(x, -x[::-1])
    assert x[g.center] == 0.0


def test_fd_stencil_zero_potential():
    g = GridSpec(1.0, 5)
    H = assemble_linear_hamiltonian(g, np.zeros(5)).toarray()
    h2 = g.spacing ** 2
    assert np.allclose(np.diag(H), 2 / h2)
    assert np.allclose(np.diag(H, 1), -1 / h2)
    g3 = GridSpec(1.0, 3)
    assert assemble_linear_hamiltonian(g3, np.zeros(3)).toarray() == pytest.approx(2 / g3.spacing ** 2)


def test_harmonic_ground_energy():
    g = GridSpec(10.0, 2001)
    H = assemble_linear_hamiltonian(g, g.nodes ** 2)
    lo = eigh(H.toarray(), eigvals_only=True, subset_by_index=(0, 0))[0]
    assert lo == pytest.approx(1.0, abs=5 * g.spacing ** 2)


def test_constant_shift_moves_every_eigenvalue():
    g = GridSpec(6.0, 301)
    V = evaluate_potential(g.nodes, DoubleWellParams(4.0))
    a = eigh(assemble_linear_hamiltonian(g, V).toarray(), eigvals_only=True)
    b = eigh(assemble_linear_hamiltonian(g, V + 3.25).toarray(), eigvals_only=True)
    assert np.max(np.abs(b - a - 3.25)) < 1e-9


def test_direct_and_fft_convolution_agree():
    g = GridSpec(11.0, 2001)
    k = InteractionKernel()
    rho = np.exp(-(g.nodes - 4) ** 2) + 0.3 * np.exp(-(g.nodes + 4) ** 2)
    assert np.max(np.abs(convolve(g, k, rho, "direct") - convolve(g, k, rho, "fft"))) <= 1e-10


def test_kernel_positive_type_on_grid():
    g = GridSpec(11.0, 2001)
    assert InteractionKernel().min_fourier_value(g) > 0


# -- Hartree solution --------------------------------------------------------

def test_hartree_solution_invariants(ref_stage):
    s = ref_stage.solution
    g = ref_stage.grid
    u = s.u_plus
    assert inner(g, u, u) == pytest.approx(1.0, abs=1e-12)
    assert np.all(u[1:-1] > 0)
    assert np.array_equal(u, u[::-1])
    assert s.residual <= 1e-10


def test_hartree_energy_monotone(ref_stage):
    E = np.array(ref_stage.solution.energies)
    assert np.all(np.diff(E) <= 1e-12 * max(1.0, abs(E[0])))


def test_chemical_potential_identity(ref_stage):
    st = ref_stage
    u = st.solution.u_plus
    E = hartree_energy(st.grid, st.params, st.kernel, u)
    mu = E + 0.5 * st.lam * interaction_energy(st.grid, st.kernel, u)
    assert st.solution.mu_plus == pytest.approx(mu, abs=1e-8)
    # same number is the lowest mean-field eigenvalue
    assert st.solution.mu_plus == pytest.approx(st.mu_plus, abs=1e-8)


def test_hartree_beats_gaussian_competitor(ref_stage):
    st = ref_stage
    x = st.grid.nodes
    g = np.exp(-(x - st.params.separation / 2) ** 2 / 2)
    g[0] = g[-1] = 0.0
    g /= math.sqrt(inner(st.grid, g, g))
    assert st.solution.hartree_energy <= hartree_energy(st.grid, st.params, st.kernel, g)


def test_zero_coupling_is_linear_problem(free_stage):
    st = free_stage
    H = assemble_linear_hamiltonian(st.grid, evaluate_potential(st.grid.nodes, st.params))
    vals = eigh(H.toarray(), eigvals_only=True, subset_by_index=(0, 0))
    assert st.solution.mu_plus == pytest.approx(vals[0], abs=1e-10)


def test_nonconvergence_raises():
    p = DoubleWellParams(8.0, 2, 0.1, 6)
    g = GridSpec(11.0, 401)
    with pytest.raises(ConvergenceError) as err:
        hartree_minimize(g, p, InteractionKernel(), tol=1e-15, max_iter=2)
    assert err.value.residual > 0


# -- spectrum ----------------------------------------------------------------

def test_spectrum_orthonormal_and_parity(ref_stage):
    s = ref_stage.spectrum
    G = (s.eigenvectors * trapezoid_weights(s.grid)) @ s.eigenvectors.T
    assert np.max(np.abs(G - np.eye(G.shape[0]))) <= 1e-10
    for u, par in zip(s.eigenvectors, s.parity):
        sign = 1 if par == "even" else -1
        assert np.array_equal(u[::-1], sign * u)
    # exact: the summands cancel in mirror pairs
    assert math.fsum(trapezoid_weights(s.grid) * s.u_plus * s.u_minus) == 0.0
    assert np.max(s.residuals()) <= 1e-8


def test_first_gap_smaller_than_second(free_stage):
    mu = free_stage.spectrum.eigenvalues
    assert mu[1] - mu[0] <= mu[2] - mu[1]


def test_spectrum_rejects_odd_cutoff(ref_stage):
    st = ref_stage
    with pytest.raises(ValueError):
        mean_field_spectrum(st.grid, st.params, st.kernel, st.solution, 7)


def test_onebody_trends(sweep_stages):
    rep = verify_onebody_properties([s.spectrum for s in sweep_stages])
    assert 0.7 <= rep["gap_slope"] <= 1.3
    assert rep["l1_strictly_decreasing"]
    assert rep["second_gap_spread"] < 0.2


def test_l1_difference_drops_when_L_doubles(ref_cfg):
    from squeezewell.pipeline import prepare
    a = l1_density_difference(prepare(ref_cfg, L=4.0).spectrum)
    b = l1_density_difference(prepare(ref_cfg, L=8.0).spectrum)
    assert b < a


@settings(max_examples=10, deadline=None)
@given(st.floats(3.0, 9.0), st.floats(0.0, 0.3))
def test_parity_fixed_points_property(L, lam):
    p = DoubleWellParams(L, 2, lam, 4)
    g = GridSpec(L / 2 + 6, 401)
    k = InteractionKernel()
    sol = hartree_minimize(g, p, k)
    s = mean_field_spectrum(g, p, k, sol, 6)
    for u, par in zip(s.eigenvectors, s.parity):
        assert np.array_equal(u[::-1], u if par == "even" else -u)
    assert s.u_minus[g.center + 1] > 0
