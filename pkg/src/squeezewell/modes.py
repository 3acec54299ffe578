"""Mode bases, coefficient tensors and the two-body kernel operators.

Two orderings of the same family are used throughout:

* the "pm" basis ``[u_plus, u_minus, u_3, u_4, ...]`` (mean-field eigenvectors)
* the "12" basis ``[u_1, u_2, u_r1, u_l1, u_r2, u_l2, ...]`` (localized modes)

They are related by the block-diagonal orthogonal matrix returned by
:func:`pm_to_12`.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .hartree import (
    GridSpec,
    InteractionKernel,
    MeanFieldSpectrum,
    apply_hamiltonian,
    convolve,
    evaluate_potential,
    trapezoid_weights,
)

SQRT_HALF = 1.0 / math.sqrt(2.0)


def pm_to_12(M_tot: int) -> np.ndarray:
    """Rows give the 12-basis vectors in terms of the pm basis."""
    if M_tot % 2:
        raise ValueError("M_tot must be even")
    block = SQRT_HALF * np.array([[1.0, 1.0], [1.0, -1.0]])
    return np.kron(np.eye(M_tot // 2), block)


@dataclass(frozen=True)
class ModeBasis:
    grid: GridSpec
    u_plus: np.ndarray
    u_minus: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    excited: tuple  # ((u_m, mu_m), ...) for m = 3..M_tot
    right: np.ndarray  # (K, n)
    left: np.ndarray
    eigenvalues: np.ndarray

    @property
    def cutoff(self) -> int:
        return self.eigenvalues.size

    @property
    def pairs(self) -> int:
        return self.right.shape[0]

    def vectors(self, basis: str = "12") -> np.ndarray:
        if basis == "pm":
            rows = [self.u_plus, self.u_minus] + [u for u, _ in self.excited]
        elif basis == "12":
            rows = [self.u1, self.u2]
            for r, l in zip(self.right, self.left):
                rows += [r, l]
        else:
            raise ValueError(f"unknown basis tag {basis!r}")
        return np.array(rows)

    def gram(self, basis: str = "12") -> np.ndarray:
        U = self.vectors(basis)
        return (U * trapezoid_weights(self.grid)) @ U.T

    def reflection_matrix(self, basis: str = "12") -> np.ndarray:
        """Matrix of x -> -x in the chosen basis (a signed permutation)."""
        U = self.vectors(basis)
        return (U * trapezoid_weights(self.grid)) @ U[:, ::-1].T


def build_mode_basis(spectrum: MeanFieldSpectrum) -> ModeBasis:
    """Assemble u1, u2 and the right/left excited modes.

    The sign conventions (u_minus > 0 on x > 0, and a nonnegative overlap of
    each pair on x > 0) are already fixed by the spectrum; here we only check
    them and form the combinations.
    """
    M_tot = spectrum.eigenvalues.size
    if M_tot < 4 or M_tot % 2:
        raise ValueError("M_tot must be even and >= 4")
    if tuple(spectrum.parity) != ("even", "odd") * (M_tot // 2):
        raise ValueError(f"spectrum parities {spectrum.parity} do not alternate within pairs")
    U = spectrum.eigenvectors.copy()
    c = spectrum.grid.center
    for a in range(M_tot // 2):
        e, o = U[2 * a], U[2 * a + 1]
        if np.sum((e * o)[c + 1:]) < 0:
            U[2 * a + 1] = -o
    if U[1, c + 1] < 0:
        raise ValueError("u_minus must be positive on x > 0")
    rot = pm_to_12(M_tot)
    L12 = rot @ U
    excited = tuple((U[m], float(spectrum.eigenvalues[m])) for m in range(2, M_tot))
    return ModeBasis(
        grid=spectrum.grid,
        u_plus=U[0], u_minus=U[1], u1=L12[0], u2=L12[1],
        excited=excited,
        right=L12[2::2].copy(), left=L12[3::2].copy(),
        eigenvalues=np.asarray(spectrum.eigenvalues, dtype=float).copy(),
    )


def left_weight(grid: GridSpec, u) -> float:
    mask = grid.nodes <= 0
    return float(np.sum((trapezoid_weights(grid) * u * u)[mask]))


# -- coefficient tensors ------------------------------------------------------

def symmetrize_tensor(w: np.ndarray) -> np.ndarray:
    """Average over the group generated by m<->p, n<->q and (m,p)<->(n,q)."""
    a = w + w.transpose(2, 1, 0, 3)
    a = a + a.transpose(0, 3, 2, 1)
    a = a + a.transpose(1, 0, 3, 2)
    return a / 8.0


def tensor_symmetry_defect(w: np.ndarray) -> float:
    return float(max(
        np.abs(w - w.transpose(2, 1, 0, 3)).max(),
        np.abs(w - w.transpose(0, 3, 2, 1)).max(),
        np.abs(w - w.transpose(1, 0, 3, 2)).max(),
    ))


@dataclass(frozen=True)
class CoefficientTensor:
    h: np.ndarray
    w: np.ndarray
    basis: str
    grid_hash: str = ""

    @property
    def size(self) -> int:
        return self.h.shape[0]

    def rotated(self, R: np.ndarray, basis: str) -> "CoefficientTensor":
        """Coefficients of the family ``R @ old`` (R orthogonal, real)."""
        h = R @ self.h @ R.T
        w = np.einsum("am,bn,cp,dq,mnpq->abcd", R, R, R, R, self.w, optimize=True)
        return CoefficientTensor(h, w, basis, self.grid_hash)

    def restricted(self, count: int) -> "CoefficientTensor":
        return CoefficientTensor(self.h[:count, :count].copy(),
                                 self.w[:count, :count, :count, :count].copy(),
                                 self.basis, self.grid_hash)

    def header(self) -> dict:
        return {"basis": self.basis, "M_tot": self.size, "grid_hash": self.grid_hash}


def grid_hash(grid: GridSpec) -> str:
    text = f"{grid.half_width!r}:{grid.points}"
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def pair_convolutions(grid, kernel, U, method="direct"):
    """w * (u_n u_q) for all n <= q, stored in a symmetric (M, M, n) array."""
    M = U.shape[0]
    C = np.empty((M, M, grid.points))
    for n in range(M):
        for q in range(n, M):
            C[n, q] = convolve(grid, kernel, U[n] * U[q], method)
            C[q, n] = C[n, q]
    return C


def compute_coefficient_tensor(basis: ModeBasis, kernel: InteractionKernel, grid: GridSpec,
                               params, which: str = "12", method: str = "direct",
                               symmetrize: bool = True) -> CoefficientTensor:
    """One-body matrix of -Delta + V_DW and the two-body tensor on the grid.

    ``w[m, n, p, q] = <u_m u_p, w * (u_n u_q)>``.  The raw quadrature already
    has the index symmetries up to rounding; ``symmetrize`` averages that away.
    """
    U = basis.vectors(which)
    wts = trapezoid_weights(grid)
    V = evaluate_potential(grid.nodes, params)
    HU = np.array([apply_hamiltonian(grid, V, u) for u in U])
    h = (U * wts) @ HU.T
    h = 0.5 * (h + h.T)
    C = pair_convolutions(grid, kernel, U, method)
    P = U[:, None, :] * U[None, :, :] * wts
    w = np.einsum("mpx,nqx->mnpq", P, C, optimize=True)
    return CoefficientTensor(h, symmetrize_tensor(w) if symmetrize else w, which, grid_hash(grid))


def two_mode_coefficients(t: CoefficientTensor) -> dict:
    """Named entries of the u1/u2 block (12 basis, 0-based indices)."""
    if t.basis != "12":
        raise ValueError("need the 12 basis")
    w = t.w
    return {
        "h11": float(t.h[0, 0]), "h22": float(t.h[1, 1]), "h12": float(t.h[0, 1]),
        "w1111": float(w[0, 0, 0, 0]), "w2222": float(w[1, 1, 1, 1]),
        "w1112": float(w[0, 0, 0, 1]), "w2221": float(w[1, 1, 1, 0]),
        "w1122": float(w[0, 0, 1, 1]), "w1212": float(w[0, 1, 0, 1]),
    }


def reflection_defect(t: CoefficientTensor) -> float:
    c = two_mode_coefficients(t)
    return max(abs(c["h11"] - c["h22"]), abs(c["w1111"] - c["w2222"]), abs(c["w1112"] - c["w2221"]))


def _fit_exponent(T, values):
    values = np.abs(np.asarray(values, dtype=float))
    if np.any(values <= 0):
        return float("nan")
    return float(np.polyfit(np.log(T), np.log(values), 1)[0])


def coefficient_decay_report(tensors, tunneling, params_list=None, mu_plus=None,
                             gaps=None) -> dict:
    """Fitted power laws of the small two-mode coefficients versus T."""
    tensors = list(tensors)
    if len(tensors) < 3:
        raise ValueError("need at least three sweep points")
    T = np.asarray(tunneling, dtype=float)
    coeffs = [two_mode_coefficients(t) for t in tensors]
    out = {
        "tunneling": T.tolist(),
        "w1111": [c["w1111"] for c in coeffs],
        "w1112": [c["w1112"] for c in coeffs],
        "w1122": [c["w1122"] for c in coeffs],
        "w1212": [c["w1212"] for c in coeffs],
        "exponent_w1112": _fit_exponent(T, [c["w1112"] for c in coeffs]),
        "exponent_w1122": _fit_exponent(T, [c["w1122"] for c in coeffs]),
        "exponent_w1212": _fit_exponent(T, [c["w1212"] for c in coeffs]),
        "w1122_min": float(min(c["w1122"] for c in coeffs)),
    }
    if params_list is not None and mu_plus is not None and gaps is not None:
        diffs, direct = [], []
        for c, p, mp, g in zip(coeffs, params_list, mu_plus, gaps):
            mu = chemical_potential(c, p.coupling, p.particle_number)
            diffs.append(mu - mp)
            direct.append(chemical_potential_offset(c, p.coupling, p.particle_number, -g))
        out["mu_minus_mu_plus"] = diffs
        out["mu_minus_mu_plus_from_coefficients"] = direct
    return out


def chemical_potential(c: dict, lam: float, N: int) -> float:
    """The constant multiplying -N_perp in the rewritten two-mode Hamiltonian."""
    return (c["h11"] + 0.5 * lam * c["w1111"]
            + lam * N / (2 * (N - 1)) * (c["w1212"] - 2 * c["w1122"])
            - lam / (2 * (N - 1)) * c["w1122"])


def chemical_potential_offset(c: dict, lam: float, N: int, mu_plus_minus_mu_minus: float) -> float:
    """mu - mu_plus expressed through the coefficients alone.

    Uses mu_plus = <u1, h_MF u1> + <u1, h_MF u2> and
    <u1, h_MF u2> = (mu_plus - mu_minus)/2.
    """
    return (lam / (2 * (N - 1)) * (c["w1212"] - (2 * N + 1) * c["w1122"])
            - lam * c["w1112"] - 0.5 * mu_plus_minus_mu_minus)


# -- kernel operators ---------------------------------------------------------

@dataclass(frozen=True)
class KernelOperators:
    K11: np.ndarray
    K22: np.ndarray
    K12: np.ndarray
    conv_u1_sq: np.ndarray
    conv_u2_sq: np.ndarray
    conv_u1u2: np.ndarray
    conv_upum: np.ndarray
    grid_trace_K11: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def K12_norm(self) -> float:
        return float(np.linalg.norm(self.K12, 2))


def compute_kernel_operators(basis: ModeBasis, kernel: InteractionKernel, grid: GridSpec,
                             method: str = "direct") -> KernelOperators:
    """K11, K22, K12 as matrices in the 12 basis."""
    U = basis.vectors("12")
    wts = trapezoid_weights(grid)
    u1, u2 = basis.u1, basis.u2
    g1 = np.array([convolve(grid, kernel, u1 * u, method) for u in U])
    g2 = np.array([convolve(grid, kernel, u2 * u, method) for u in U])
    K11 = 0.5 * (U * (u1 * wts)) @ g1.T
    K22 = 0.5 * (U * (u2 * wts)) @ g2.T
    K12 = (U * (u2 * wts)) @ g1.T
    K11 = 0.5 * (K11 + K11.T)
    K22 = 0.5 * (K22 + K22.T)
    c11 = convolve(grid, kernel, u1 * u1, method)
    c22 = convolve(grid, kernel, u2 * u2, method)
    c12 = convolve(grid, kernel, u1 * u2, method)
    cpm = convolve(grid, kernel, basis.u_plus * basis.u_minus, method)
    # trace of the grid operator: 1/2 w(0) int |u1|^2
    tr = 0.5 * float(kernel(0.0)) * float(np.sum(wts * u1 * u1))
    return KernelOperators(K11, K22, K12, c11, c22, c12, cpm, tr)


def kernel_l1_bound(basis: ModeBasis, kernel: InteractionKernel) -> float:
    """Right-hand side of sup|w*(u1 u2)| <= sup(w)/2 * || u+^2 - u-^2 ||_1."""
    wts = trapezoid_weights(basis.grid)
    diff = np.abs(basis.u_plus ** 2 - basis.u_minus ** 2)
    return 0.5 * float(kernel(0.0)) * float(np.sum(wts * diff))


# -- Bessel-type bounds for the excited projections ---------------------------

def one_index_bound(grid, kernel, U_exc, f, g, h, method="direct"):
    """(lhs, rhs) of sum_m |<f (x) g, w h (x) u_m>|^2 <= <g, |w*(f h)|^2 g>."""
    wts = trapezoid_weights(grid)
    c = convolve(grid, kernel, f * h, method)
    vec = g * c
    lhs = float(np.sum(((U_exc * wts) @ vec) ** 2))
    rhs = float(np.sum(wts * vec * vec))
    return lhs, rhs


def two_index_bound(grid, kernel, U_exc, f, g):
    """(lhs, rhs) of sum_mn |<f (x) g, w u_m (x) u_n>|^2 <= <f (x) g, w^2 f (x) g>."""
    wts = trapezoid_weights(grid)
    x = grid.nodes
    W = kernel(x[:, None] - x[None, :])
    A = (f * wts)[:, None] * W * (g * wts)[None, :]
    coeffs = (U_exc @ A) @ U_exc.T
    lhs = float(np.sum(coeffs ** 2))
    rhs = float(np.sum(((f * f * wts)[:, None] * W ** 2 * (g * g * wts)[None, :])))
    return lhs, rhs
