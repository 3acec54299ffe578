"""Right/left quadratic blocks, Bogoliubov energies and their oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fockspace import FockOperatorSet, ground_state
from .hartree import trapezoid_weights
from .modes import KernelOperators, ModeBasis

FLOOR = 1e-12


@dataclass(frozen=True)
class QuadraticBlock:
    side: str
    D: np.ndarray
    V: np.ndarray
    lam: float

    @property
    def M(self) -> int:
        return self.D.shape[0]


def _sym_function(A, f, floor=FLOOR):
    vals, vecs = np.linalg.eigh(0.5 * (A + A.T))
    vals = np.maximum(vals, floor)
    return (vecs * f(vals)) @ vecs.T


def _check_block(D, V):
    dmin = float(np.linalg.eigvalsh(D).min())
    if dmin <= 0:
        raise ValueError(f"D is not positive definite: smallest eigenvalue {dmin:.6e}")


def pair_indices(alpha: int):
    """Positions of u_{r,alpha} and u_{l,alpha} in the 12 basis (alpha from 1)."""
    return 2 * alpha, 2 * alpha + 1


def build_blocks(basis: ModeBasis, kernels: KernelOperators, lam: float, M: int | None = None):
    """Right and left blocks with cutoff M (default: every available pair).

    D is diagonal with the pair-averaged eigenvalues minus mu_plus; the pair
    splitting is returned separately as the right<->left coupling.
    """
    K = basis.pairs
    M = K if M is None else M
    if not 1 <= M <= K:
        raise ValueError(f"cutoff M={M} must lie in 1..{K}")
    mu = basis.eigenvalues
    mu_plus = mu[0]
    avg = np.array([0.5 * (mu[2 * a] + mu[2 * a + 1]) for a in range(1, M + 1)]) - mu_plus
    D = np.diag(avg)
    _check_block(D, None)
    r = [pair_indices(a)[0] for a in range(1, M + 1)]
    l = [pair_indices(a)[1] for a in range(1, M + 1)]
    Vr = lam * kernels.K11[np.ix_(r, r)]
    Vl = lam * kernels.K22[np.ix_(l, l)]
    return QuadraticBlock("right", D, 0.5 * (Vr + Vr.T), lam), QuadraticBlock("left", D.copy(), 0.5 * (Vl + Vl.T), lam)


def neglected_couplings(basis: ModeBasis, kernels: KernelOperators, M: int | None = None) -> dict:
    """Sizes of the right<->left terms left out of the block Hamiltonians."""
    K = basis.pairs
    M = K if M is None else M
    mu = basis.eigenvalues
    xi1 = np.array([0.5 * (mu[2 * a] - mu[2 * a + 1]) for a in range(1, M + 1)])
    r = [pair_indices(a)[0] for a in range(1, M + 1)]
    l = [pair_indices(a)[1] for a in range(1, M + 1)]
    cross = kernels.K11[np.ix_(r, l)]
    return {
        "xi1": xi1,
        "xi1_norm": float(np.max(np.abs(xi1))) if xi1.size else 0.0,
        "K12_norm": kernels.K12_norm,
        "conv_u1u2_sup": float(np.max(np.abs(kernels.conv_u1u2))),
        "K11_cross_norm": float(np.linalg.norm(cross, 2)) if cross.size else 0.0,
    }


def _sqrt_argument(block):
    Dh = _sym_function(block.D, np.sqrt)
    X = block.D @ block.D + 2 * Dh @ block.V @ Dh
    return 0.5 * (X + X.T), Dh


def bogoliubov_energy(block: QuadraticBlock) -> float:
    """-1/2 Tr[D + V - sqrt(D^2 + 2 D^{1/2} V D^{1/2})]."""
    X, _ = _sqrt_argument(block)
    xmin = float(np.linalg.eigvalsh(X).min())
    if xmin < -1e-10:
        raise ValueError(f"square-root argument has eigenvalue {xmin:.3e}")
    E = _sym_function(X, np.sqrt)
    return float(-0.5 * np.trace(block.D + block.V - E))


def total_bogoliubov_energy(right: QuadraticBlock, left: QuadraticBlock) -> float:
    return bogoliubov_energy(right) + bogoliubov_energy(left)


@dataclass(frozen=True)
class BogoliubovDiag:
    E: np.ndarray
    U0: np.ndarray
    modes: np.ndarray  # e_alpha
    A0: np.ndarray
    B0: np.ndarray
    S: np.ndarray
    energy: float
    trace_constant: float
    checks: dict = field(default_factory=dict)


def symplectic_form(M: int) -> np.ndarray:
    Z, I = np.zeros((M, M)), np.eye(M)
    return np.block([[Z, I], [-I, Z]])


def symplectic_diagonalize(block: QuadraticBlock) -> BogoliubovDiag:
    D, V = block.D, block.V
    M = block.M
    X, Dh = _sqrt_argument(block)
    vals, U0 = np.linalg.eigh(X)
    if vals.min() <= FLOOR:
        raise ValueError("singular transformation: a normal-mode frequency vanishes")
    e = np.sqrt(vals)
    E = (U0 * e) @ U0.T
    Dih = _sym_function(D, lambda x: 1 / np.sqrt(x))
    Eih = (U0 / np.sqrt(e)) @ U0.T
    Erh = (U0 * np.sqrt(e)) @ U0.T
    A0 = Dh @ Eih @ U0
    B0 = Dih @ Erh @ U0
    S = 0.5 * np.block([[A0 + B0, A0 - B0], [A0 - B0, A0 + B0]])
    trace_constant = 0.5 * float(np.trace(D + V))
    energy = 0.5 * float(e.sum()) - trace_constant
    J = symplectic_form(M)
    Lam = np.diag(e)
    quad = np.block([[D + V, V], [V, D + V]])
    checks = {
        "B0_inverse_transpose": float(np.abs(B0 - np.linalg.inv(A0).T).max()),
        "A0_diagonalizes": float(np.abs(A0.T @ (D + 2 * V) @ A0 - Lam).max()),
        "B0_diagonalizes": float(np.abs(B0.T @ D @ B0 - Lam).max()),
        "symplectic": float(np.abs(S.T @ J @ S - J).max()),
        "quadratic_form": float(np.abs(S.T @ quad @ S - np.block([[Lam, np.zeros((M, M))], [np.zeros((M, M)), Lam]])).max()),
    }
    return BogoliubovDiag(E, U0, e, A0, B0, S, energy, trace_constant, checks)


@dataclass(frozen=True)
class OracleResult:
    energy: float
    n_max: int
    previous: float
    converged: bool
    dimension: int


def quadratic_fock_hamiltonian(D, V, n_max: int):
    """Sum (D+V)_ab a_a^dag a_b + 1/2 sum V_ab (a_a^dag a_b^dag + a_a a_b), truncated."""
    M = D.shape[0]
    ops = FockOperatorSet(M, n_max)
    a = [ops.annihilation(m) for m in range(M)]
    H = None
    A = D + V
    for i in range(M):
        for j in range(M):
            term = A[i, j] * (a[i].T @ a[j])
            if V[i, j] != 0.0:
                pair = a[i] @ a[j]
                term = term + 0.5 * V[i, j] * (pair.T + pair)
            H = term if H is None else H + term
    H = H.tocsr()
    return 0.5 * (H + H.T), ops


def fock_oracle_quadratic(block: QuadraticBlock, n_max: int, tol: float = 1e-8) -> OracleResult:
    """Ground energy of the block Hamiltonian in a Fock space truncated at n_max bosons.

    The truncation is a compression, so energies decrease in n_max; the
    result is flagged unconverged if the step from n_max - 2 is above ``tol``.
    """
    def solve(n):
        H, ops = quadratic_fock_hamiltonian(block.D, block.V, n)
        gs = ground_state(H, tol=1e-12)
        return gs.energy, ops.dimension

    e, dim = solve(n_max)
    prev = solve(n_max - 2)[0] if n_max >= 4 else math.nan
    converged = bool(abs(prev - e) <= tol) if not math.isnan(prev) else False
    return OracleResult(e, n_max, prev, converged, dim)


@dataclass(frozen=True)
class ShiftData:
    W: np.ndarray
    shift: np.ndarray
    residual: float
    variance_coef: float
    rhs: np.ndarray


def _block_shift(block, mode_vectors, partner, conv_pm, k_vec, N, grid):
    wts = trapezoid_weights(grid)
    rhs = (mode_vectors * wts) @ (conv_pm * partner)
    Amat = block.D + 2 * block.V
    W = np.linalg.inv(Amat)
    W = 0.5 * (W + W.T)
    b = block.lam / math.sqrt(2 * (N - 1)) * rhs
    x = np.linalg.solve(Amat, b)
    res = float(np.abs(Amat @ x - b).max())
    coef = float(k_vec @ W @ k_vec)
    return ShiftData(W, x, res, coef, rhs)


def shift_and_variance(right: QuadraticBlock, left: QuadraticBlock, basis: ModeBasis,
                       kernels: KernelOperators, N: int):
    """Shift vectors and variance coefficients for both wells.

    The left well uses the mirror construction (u2, K22, left modes).
    """
    if N < 2:
        raise ValueError("need N >= 2")
    M = right.M
    r = [pair_indices(a)[0] for a in range(1, M + 1)]
    l = [pair_indices(a)[1] for a in range(1, M + 1)]
    sr = _block_shift(right, basis.right[:M], basis.u1, kernels.conv_upum,
                      kernels.K11[r, 0], N, basis.grid)
    sl = _block_shift(left, basis.left[:M], basis.u2, kernels.conv_upum,
                      kernels.K22[l, 1], N, basis.grid)
    return sr, sl


def variance_coefficients(D, K_r, K_l, k_r, k_l, lam):
    """k^t (D + 2 lam K)^{-1} k for both wells at coupling lam."""
    cr = float(k_r @ np.linalg.solve(D + 2 * lam * K_r, k_r))
    cl = float(k_l @ np.linalg.solve(D + 2 * lam * K_l, k_l))
    return cr, cl


def stability_threshold(D, K_r, K_l, k_r, k_l, U, lam_grid) -> float:
    """Largest lam on the grid (contiguous from the start) with
    lam U - lam^2/2 (coef_r + coef_l) >= lam U / 2."""
    best = 0.0
    for lam in lam_grid:
        cr, cl = variance_coefficients(D, K_r, K_l, k_r, k_l, lam)
        if lam * U - 0.5 * lam * lam * (cr + cl) >= 0.5 * lam * U:
            best = float(lam)
        else:
            break
    return best


def block_kernels(basis: ModeBasis, kernels: KernelOperators, M: int):
    r = [pair_indices(a)[0] for a in range(1, M + 1)]
    l = [pair_indices(a)[1] for a in range(1, M + 1)]
    return (kernels.K11[np.ix_(r, r)], kernels.K22[np.ix_(l, l)],
            kernels.K11[r, 0], kernels.K22[l, 1])
