"""Double-well Hartree problem on a uniform 1D grid.

Everything here is discretized with second-order finite differences, hard
Dirichlet walls at +-X and the trapezoid rule.  Grid vectors always carry all
``n`` nodes (the two wall values are zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.signal import fftconvolve


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class DoubleWellParams:
    separation: float
    exponent: float = 2.0
    coupling: float = 0.0
    particle_number: int = 2

    def __post_init__(self):
        if self.separation <= 0:
            raise ValueError("separation must be positive")
        if self.exponent < 2:
            raise ValueError("exponent must be >= 2")
        if self.coupling < 0:
            raise ValueError("negative coupling is not supported")
        if int(self.particle_number) != self.particle_number or self.particle_number < 2:
            raise ValueError("particle_number must be an integer >= 2")


@dataclass(frozen=True)
class GridSpec:
    half_width: float
    points: int

    def __post_init__(self):
        if self.points < 3:
            raise ValueError("grid needs at least 3 points")
        if self.points % 2 == 0:
            raise ValueError("grid needs an odd number of points so that x=0 is a node")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points - 1)

    @property
    def nodes(self) -> np.ndarray:
        # symmetric construction so that x[i] == -x[n-1-i] bit for bit
        k = np.arange(self.points) - (self.points - 1) // 2
        return k * self.spacing

    @property
    def center(self) -> int:
        return (self.points - 1) // 2

    @classmethod
    def for_params(cls, params: DoubleWellParams, points: int = 2001, margin: float | None = None):
        """Default box: wall placed where the single-well potential reaches 40."""
        if margin is None:
            margin = 2.0 * 40.0 ** (1.0 / params.exponent)
        return cls(params.separation / 2 + margin, points)


@dataclass(frozen=True)
class InteractionKernel:
    """Tent profile w(x) = amplitude * max(0, 1 - |x|/range)."""

    amplitude: float = 1.0
    range: float = 1.0

    def __post_init__(self):
        if self.amplitude <= 0 or self.range <= 0:
            raise ValueError("kernel amplitude and range must be positive")

    def __call__(self, x):
        return self.amplitude * np.maximum(0.0, 1.0 - np.abs(x) / self.range)

    def samples(self, grid: GridSpec) -> np.ndarray:
        """Kernel values at lags -K..K (in units of the grid spacing)."""
        h = grid.spacing
        K = min(int(math.floor(self.range / h)), grid.points - 1)
        lags = np.arange(-K, K + 1) * h
        return self(lags)

    def min_fourier_value(self, grid: GridSpec) -> float:
        """Smallest value of the discrete transform of the sampled kernel.

        Zero-padded to twice the grid length so the sampled frequencies
        are those seen by a linear (non-circular) convolution.
        """
        k = self.samples(grid)
        K = (k.size - 1) // 2
        P = max(2 * grid.points, k.size)
        buf = np.zeros(P)
        buf[: K + 1] = k[K:]
        if K:
            buf[-K:] = k[:K]
        spectrum = np.fft.fft(buf) * grid.spacing
        return float(spectrum.real.min())


def evaluate_potential(x, params: DoubleWellParams):
    a = params.separation / 2
    s = params.exponent
    return np.minimum(np.abs(x - a) ** s, np.abs(x + a) ** s)


def agmon_distance(x, s):
    p = 1.0 + s / 2.0
    return np.abs(x) ** p / p


def tunneling_parameter(L, s):
    return float(np.exp(-2.0 * agmon_distance(L / 2.0, s)))


def trapezoid_weights(grid: GridSpec) -> np.ndarray:
    w = np.full(grid.points, grid.spacing)
    w[0] = w[-1] = grid.spacing / 2
    return w


def inner(grid: GridSpec, f, g) -> float:
    return float(np.sum(trapezoid_weights(grid) * f * g))


def convolve(grid: GridSpec, kernel: InteractionKernel, rho, method: str = "direct"):
    """(w * rho)(x_i) by the trapezoid rule, returned on every node."""
    k = kernel.samples(grid)
    K = (k.size - 1) // 2
    f = np.asarray(rho, dtype=float) * trapezoid_weights(grid)
    if method == "direct":
        full = np.convolve(f, k, mode="full")
    elif method == "fft":
        full = fftconvolve(f, k, mode="full")
    else:
        raise ValueError(f"unknown convolution method {method!r}")
    return full[K: K + grid.points]


def _as_even(v):
    return 0.5 * (v + v[::-1])


def assemble_linear_hamiltonian(grid: GridSpec, potential) -> sp.csr_matrix:
    """-d^2/dx^2 + V on the interior nodes (Dirichlet walls)."""
    n = grid.points
    if n < 3:
        raise ValueError("need n >= 3")
    potential = np.asarray(potential, dtype=float)
    if potential.shape != (n,):
        raise ValueError("potential must be sampled on all grid nodes")
    h2 = grid.spacing ** 2
    m = n - 2
    diag = 2.0 / h2 + potential[1:-1]
    off = np.full(m - 1, -1.0 / h2)
    return sp.diags([off, diag, off], [-1, 0, 1], format="csr")


def apply_hamiltonian(grid: GridSpec, potential, u) -> np.ndarray:
    """(-Delta + V) u on the full grid; wall values of the result are zero."""
    h2 = grid.spacing ** 2
    out = np.zeros_like(u, dtype=float)
    out[1:-1] = (2 * u[1:-1] - u[:-2] - u[2:]) / h2 + potential[1:-1] * u[1:-1]
    return out


def _parity_eigs(grid: GridSpec, potential, parity: str, count: int):
    """Lowest eigenpairs of the even or odd half-grid problem.

    Returned vectors live on the full grid and have unit L2 norm.
    """
    n, c, h = grid.points, grid.center, grid.spacing
    h2 = h * h
    if parity == "even":
        idx = np.arange(c, n - 1)
        diag = 2.0 / h2 + potential[idx]
        off = np.full(idx.size - 1, -1.0 / h2)
        if off.size:
            # reflection doubles the coupling into x=0; rescaling y_i = sqrt2 u_i
            # for i>0 turns the Neumann row into a symmetric matrix
            off[0] = -math.sqrt(2.0) / h2
    else:
        idx = np.arange(c + 1, n - 1)
        diag = 2.0 / h2 + potential[idx]
        off = np.full(idx.size - 1, -1.0 / h2)
    count = min(count, idx.size)
    vals, vecs = eigh_tridiagonal(diag, off, select="i", select_range=(0, count - 1))
    out = np.zeros((count, n))
    sign = 1.0 if parity == "even" else -1.0
    for j in range(count):
        y = vecs[:, j]
        right = np.zeros(n - c)
        if parity == "even":
            right[0] = y[0]
            right[1: 1 + y.size - 1] = y[1:] / math.sqrt(2.0)
        else:
            right[1: 1 + y.size] = y / math.sqrt(2.0)
        out[j, c:] = right
        out[j, :c] = sign * right[:0:-1]
        out[j] /= math.sqrt(h)
        # sign: largest entry on the right half is positive
        if out[j, c:][np.argmax(np.abs(out[j, c:]))] < 0:
            out[j] = -out[j]
    return vals, out


def hartree_energy(grid, params, kernel, u, method="direct"):
    V = evaluate_potential(grid.nodes, params)
    rho = u * u
    lin = inner(grid, u, apply_hamiltonian(grid, V, u))
    inter = inner(grid, rho, convolve(grid, kernel, rho, method))
    return lin + 0.5 * params.coupling * inter


def interaction_energy(grid, kernel, u, method="direct"):
    """Double integral of w(x-y)|u(x)|^2|u(y)|^2."""
    rho = u * u
    return inner(grid, rho, convolve(grid, kernel, rho, method))


@dataclass(frozen=True)
class HartreeSolution:
    u_plus: np.ndarray
    mu_plus: float
    hartree_energy: float
    residual: float
    iterations: int
    energies: tuple = field(default=(), repr=False)
    damping: float = 0.5


def hartree_minimize(grid: GridSpec, params: DoubleWellParams, kernel: InteractionKernel,
                     tol: float = 1e-10, damping: float = 0.5, max_iter: int = 500,
                     method: str = "direct") -> HartreeSolution:
    """Self-consistent field iteration with linear density mixing.

    The accepted Hartree energies are kept in ``energies``; if one step
    raises the energy the iteration restarts from the last accepted
    density with half the damping.
    """
    if params.coupling < 0:
        raise ValueError("negative coupling is not supported")
    if tol <= 0 or not (0 < damping <= 1):
        raise ValueError("need tol > 0 and 0 < damping <= 1")
    lam = params.coupling
    V = evaluate_potential(grid.nodes, params)
    h = grid.spacing

    def ground(rho):
        pot = V + lam * _as_even(convolve(grid, kernel, rho, method)) if lam else V
        vals, vecs = _parity_eigs(grid, pot, "even", 1)
        return vals[0], vecs[0]

    mu, u = ground(np.zeros(grid.points))
    rho = u * u
    mu, u = ground(rho)
    energies = [hartree_energy(grid, params, kernel, u, method)]
    residual = math.sqrt(h * np.sum((u * u - rho) ** 2))
    it = 0
    while residual > tol:
        if it >= max_iter:
            raise ConvergenceError(f"no convergence after {max_iter} iterations", residual)
        it += 1
        while True:
            trial = (1 - damping) * rho + damping * u * u
            mu_t, u_t = ground(trial)
            e = hartree_energy(grid, params, kernel, u_t, method)
            if e <= energies[-1] + 1e-12 * max(1.0, abs(energies[-1])):
                break
            damping *= 0.5
            if damping < 1e-8:
                raise ConvergenceError("damping collapsed without energy decrease", residual)
        rho, mu, u = trial, mu_t, u_t
        energies.append(e)
        residual = math.sqrt(h * np.sum((u * u - rho) ** 2))

    energy = energies[-1]
    mu_plus = energy + 0.5 * lam * interaction_energy(grid, kernel, u, method)
    return HartreeSolution(u, float(mu_plus), float(energy), float(residual), it,
                           tuple(energies), damping)


def mean_field_potential(grid, params, kernel, u_plus, method="direct"):
    V = evaluate_potential(grid.nodes, params)
    if params.coupling == 0:
        return V
    return V + params.coupling * _as_even(convolve(grid, kernel, u_plus * u_plus, method))


@dataclass(frozen=True)
class MeanFieldSpectrum:
    grid: GridSpec
    params: DoubleWellParams
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    parity: tuple
    potential: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    @property
    def tunneling(self) -> float:
        return tunneling_parameter(self.params.separation, self.params.exponent)

    @property
    def u_plus(self):
        return self.eigenvectors[0]

    @property
    def u_minus(self):
        return self.eigenvectors[1]

    def residuals(self) -> np.ndarray:
        return np.array([
            math.sqrt(inner(self.grid, r, r))
            for r in (apply_hamiltonian(self.grid, self.potential, u) - mu * u
                      for mu, u in zip(self.eigenvalues, self.eigenvectors))
        ])

    def operator_norm_bound(self) -> float:
        return 4.0 / self.grid.spacing ** 2 + float(np.max(np.abs(self.potential)))


def mean_field_spectrum(grid, params, kernel, solution: HartreeSolution, M_tot: int,
                        method: str = "direct") -> MeanFieldSpectrum:
    """Lowest ``M_tot`` eigenpairs of h_MF, parity sector by sector.

    In one dimension the parities alternate along the spectrum, so each
    sector contributes ``M_tot/2`` states; anything else is an error.
    """
    if M_tot < 4 or M_tot % 2:
        raise ValueError("M_tot must be even and >= 4")
    pot = mean_field_potential(grid, params, kernel, solution.u_plus, method)
    k = M_tot // 2
    ev, uv = _parity_eigs(grid, pot, "even", k + 1)
    ov, uo = _parity_eigs(grid, pot, "odd", k + 1)
    if ev.size < k or ov.size < k:
        raise ValueError("grid too coarse for the requested number of modes")
    vals = np.concatenate([ev, ov])
    labels = ["even"] * ev.size + ["odd"] * ov.size
    order = np.argsort(vals, kind="stable")[:M_tot]
    merged = [labels[i] for i in order]
    expected = ["even", "odd"] * k
    metadata = {"ambiguous_pairs": []}
    sorted_vals = vals[order]
    for i in range(M_tot - 1):
        if sorted_vals[i + 1] - sorted_vals[i] < 1e-13:
            metadata["ambiguous_pairs"].append((i, i + 1))
    if merged != expected:
        raise ValueError(f"parity sequence {merged} does not alternate")

    eigvecs = np.empty((M_tot, grid.points))
    eigvals = np.empty(M_tot)
    for a in range(k):
        e_vec, o_vec = uv[a].copy(), uo[a].copy()
        c = grid.center
        if a == 0:
            # u_minus positive on x > 0
            if o_vec[c + 1] < 0:
                o_vec = -o_vec
        if np.sum((e_vec * o_vec)[c + 1:]) < 0:
            o_vec = -o_vec
        eigvecs[2 * a], eigvecs[2 * a + 1] = e_vec, o_vec
        eigvals[2 * a], eigvals[2 * a + 1] = ev[a], ov[a]
    return MeanFieldSpectrum(grid, params, eigvals, eigvecs, tuple(expected), pot, metadata)


def l1_density_difference(spectrum: MeanFieldSpectrum) -> float:
    d = np.abs(spectrum.u_plus ** 2 - spectrum.u_minus ** 2)
    return float(np.sum(trapezoid_weights(spectrum.grid) * d))


def verify_onebody_properties(spectra) -> dict:
    """Trends over a separation sweep."""
    spectra = list(spectra)
    if len(spectra) < 3:
        raise ValueError("need at least three separations")
    Ls = [s.params.separation for s in spectra]
    T = np.array([s.tunneling for s in spectra])
    gaps = np.array([s.gap for s in spectra])
    second = np.array([s.eigenvalues[2] - s.eigenvalues[1] for s in spectra])
    l1 = [l1_density_difference(s) for s in spectra]
    slope = float(np.polyfit(np.log(T), np.log(gaps), 1)[0]) if np.all(gaps > 0) else float("nan")
    loc = []
    for s in spectra:
        u1 = (s.u_plus + s.u_minus) / math.sqrt(2)
        mask = s.grid.nodes <= 0
        loc.append(float(np.sum((trapezoid_weights(s.grid) * u1 * u1)[mask])))
    return {
        "separations": Ls,
        "tunneling": T.tolist(),
        "gap": gaps.tolist(),
        "gap_slope": slope,
        "second_gap": second.tolist(),
        "second_gap_min": float(second.min()),
        "second_gap_spread": float((second.max() - second.min()) / second.mean()),
        "l1_difference": l1,
        "l1_strictly_decreasing": bool(all(b < a for a, b in zip(l1, l1[1:]))),
        "left_weight_of_u1": loc,
    }
