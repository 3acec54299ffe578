"""Two-mode and Bose-Hubbard Hamiltonians on the (N+1)-dimensional sector.

Sector states are ordered like :class:`~squeezewell.fockspace.FockBasis`
with two modes: index i holds (n1, n2) = (N - i, i), i.e. d = n1 - n2
runs from N down to -N in steps of 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eig_banded


class TwoModeSector:
    def __init__(self, N: int):
        if N < 0:
            raise ValueError("N must be nonnegative")
        self.N = N
        self._low = {}

    @property
    def dimension(self) -> int:
        return self.N + 1

    @property
    def d_values(self) -> np.ndarray:
        return self.N - 2 * np.arange(self.N + 1)

    def lower(self, mode: int, k: int | None = None) -> sp.csr_matrix:
        """a_mode from the k-particle sector to the (k-1)-particle sector."""
        k = self.N if k is None else k
        key = (mode, k)
        if key not in self._low:
            i = np.arange(k + 1)
            n1, n2 = k - i, i
            if mode == 1:
                keep = n1 > 0
                rows, vals = i[keep], np.sqrt(n1[keep])
            elif mode == 2:
                keep = n2 > 0
                rows, vals = i[keep] - 1, np.sqrt(n2[keep])
            else:
                raise ValueError("mode must be 1 or 2")
            self._low[key] = sp.csr_matrix((vals.astype(float), (rows, i[keep])), shape=(k, k + 1))
        return self._low[key]

    def raise_(self, mode: int, k: int | None = None) -> sp.csr_matrix:
        """a_mode^dag from sector k-1 to sector k."""
        return self.lower(mode, k).T.tocsr()

    def one_body(self, m: int, n: int) -> sp.csr_matrix:
        return (self.raise_(m) @ self.lower(n)).tocsr()

    def two_body(self, m: int, n: int, p: int, q: int) -> sp.csr_matrix:
        """a_m^dag a_n^dag a_p a_q."""
        N = self.N
        return (self.raise_(m, N) @ self.raise_(n, N - 1) @ self.lower(p, N - 1)
                @ self.lower(q, N)).tocsr()

    def number(self, mode: int) -> sp.csr_matrix:
        return self.one_body(mode, mode)

    def hopping(self) -> sp.csr_matrix:
        return (self.one_body(1, 2) + self.one_body(2, 1)).tocsr()

    def difference(self) -> sp.csr_matrix:
        return (self.number(1) - self.number(2)).tocsr()

    def minus_number(self) -> sp.csr_matrix:
        """N_- = (N1 + N2 - a1^dag a2 - a2^dag a1)/2: occupation of u_minus."""
        return (0.5 * (self.number(1) + self.number(2) - self.hopping())).tocsr()

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.dimension, format="csr")


@dataclass(frozen=True)
class TwoModeConstants:
    N: int
    lam: float
    E0: float
    E_w: float
    mu: float
    U: float
    half_gap: float  # (mu_plus - mu_minus)/2
    tunnel_perp_coeff: float  # multiplies N_perp in the hopping prefactor
    tunnel_perp_shift_coeff: float  # multiplies (N_perp - 1)
    quad_perp_coeff: float

    def tunnel_on_sector(self) -> float:
        """Hopping prefactor with N_perp = 0."""
        return self.half_gap + self.tunnel_perp_shift_coeff


def coefficients_from_arrays(h, w) -> dict:
    h = np.asarray(h)
    w = np.asarray(w)
    return {
        "h11": float(h[0, 0]), "h22": float(h[1, 1]), "h12": float(h[0, 1]),
        "w1111": float(w[0, 0, 0, 0]), "w2222": float(w[1, 1, 1, 1]),
        "w1112": float(w[0, 0, 0, 1]), "w2221": float(w[1, 1, 1, 0]),
        "w1122": float(w[0, 0, 1, 1]), "w1212": float(w[0, 1, 0, 1]),
    }


def two_mode_constants(c: dict, lam: float, N: int, half_gap: float | None = None) -> TwoModeConstants:
    """Constants of the rewritten two-mode Hamiltonian.

    ``half_gap`` is (mu_plus - mu_minus)/2.  For the physical tensor it equals
    h12 + lam*(w1112 + w1122); that combination is used when it is omitted,
    which is what makes the rewriting an identity for arbitrary tensors.
    """
    if N < 2:
        raise ValueError("need N >= 2")
    w1111, w1112, w1122, w1212 = c["w1111"], c["w1112"], c["w1122"], c["w1212"]
    if half_gap is None:
        half_gap = c["h12"] + lam * (w1112 + w1122)
    k = lam / (N - 1)
    E0 = N * c["h11"] + lam * N * N / (4 * (N - 1)) * (2 * w1122 - w1212)
    E_w = N * (lam * N / (4 * (N - 1)) * (w1111 - 4 * w1122 + 2 * w1212)
               - lam / (2 * (N - 1)) * (w1111 + w1122))
    mu = (c["h11"] + 0.5 * lam * w1111 + lam * N / (2 * (N - 1)) * (w1212 - 2 * w1122)
          - lam / (2 * (N - 1)) * w1122)
    return TwoModeConstants(
        N=N, lam=lam, E0=E0, E_w=E_w, mu=mu, U=(w1111 - w1212) / 4,
        half_gap=half_gap, tunnel_perp_coeff=k * w1112, tunnel_perp_shift_coeff=k * w1122,
        quad_perp_coeff=lam * (w1111 - 2 * w1122 + w1212) / (4 * (N - 1)),
    )


def assemble_H2mode(N: int, h, w, lam: float, sector: TwoModeSector | None = None) -> sp.csr_matrix:
    """Direct contraction over m, n, p, q in {1, 2}."""
    if N < 2:
        raise ValueError("need N >= 2")
    S = sector or TwoModeSector(N)
    h = np.asarray(h)[:2, :2]
    w = np.asarray(w)[:2, :2, :2, :2]
    H = sp.csr_matrix((S.dimension, S.dimension))
    for m in (1, 2):
        for n in (1, 2):
            H = H + h[m - 1, n - 1] * S.one_body(m, n)
    pref = lam / (2 * (N - 1))
    for m in (1, 2):
        for n in (1, 2):
            for p in (1, 2):
                for q in (1, 2):
                    H = H + pref * w[m - 1, n - 1, p - 1, q - 1] * S.two_body(m, n, p, q)
    return (0.5 * (H + H.T)).tocsr()


def assemble_H2mode_rewritten(N: int, const: TwoModeConstants, w1122: float,
                              sector: TwoModeSector | None = None) -> sp.csr_matrix:
    """The rewritten form with N_perp = 0."""
    S = sector or TwoModeSector(N)
    lam = const.lam
    I = S.identity()
    D = S.difference()
    Nm = S.minus_number()
    H = ((const.E0 + const.E_w) * I
         + const.tunnel_on_sector() * S.hopping()
         + lam * const.U / (N - 1) * (D @ D)
         + 2 * lam * w1122 / (N - 1) * (Nm @ Nm))
    return H.tocsr()


def square_identity_sides(sector: TwoModeSector):
    """Both sides of
    (a1^dag a2)^2 + (a2^dag a1)^2 + 2 N1 N2
        = 2 n J - n^2 + 4 N_-^2 - n,   n = N1 + N2, J = hopping.
    """
    S = sector
    h12, h21 = S.one_body(1, 2), S.one_body(2, 1)
    N1, N2 = S.number(1), S.number(2)
    n = N1 + N2
    J = S.hopping()
    Nm = S.minus_number()
    lhs = h12 @ h12 + h21 @ h21 + 2 * (N1 @ N2)
    rhs = 2 * (n @ J) - n @ n + 4 * (Nm @ Nm) - n
    return lhs.tocsr(), rhs.tocsr()


def assemble_HBH(N: int, w1111: float, mu_plus: float, mu_minus: float, lam: float,
                 sector: TwoModeSector | None = None) -> sp.csr_matrix:
    if N < 2:
        raise ValueError("need N >= 2")
    S = sector or TwoModeSector(N)
    pair = S.two_body(1, 1, 1, 1) + S.two_body(2, 2, 2, 2)
    return (0.5 * (mu_plus - mu_minus) * S.hopping()
            + lam * w1111 / (2 * (N - 1)) * pair).tocsr()


def bose_hubbard_closed_form(N, w1111, mu_plus, mu_minus, lam) -> float:
    return (lam * N * N * w1111 / (4 * (N - 1)) - lam * N * w1111 / (2 * (N - 1))
            + (mu_plus - mu_minus) * N / 2)


def sector_spectrum(H, count: int = 2):
    """Lowest eigenpairs of a banded sector matrix."""
    A = H.tocoo()
    n = H.shape[0]
    if n == 1:
        return np.array([float(A.toarray()[0, 0])]), np.ones((1, 1))
    bw = int(np.max(np.abs(A.row - A.col))) if A.nnz else 0
    bw = max(bw, 1)
    ab = np.zeros((bw + 1, n))
    upper = A.col >= A.row
    ab[bw + A.row[upper] - A.col[upper], A.col[upper]] = A.data[upper]
    count = min(count, n)
    vals, vecs = eig_banded(ab, lower=False, select="i", select_range=(0, count - 1))
    return vals, vecs


# -- Gaussian trial states ----------------------------------------------------

@dataclass(frozen=True)
class GaussianState:
    N: int
    sigma2: float
    excited: int
    d: np.ndarray  # admissible d values with nonzero weight, ascending
    coefficients: np.ndarray

    def coefficient(self, d) -> float:
        idx = np.searchsorted(self.d, d)
        if idx < self.d.size and self.d[idx] == d:
            return float(self.coefficients[idx])
        return 0.0

    def sector_vector(self, sector: TwoModeSector) -> np.ndarray:
        if self.excited != 0 or sector.N != self.N:
            raise ValueError("sector vector only exists for s = 0 and matching N")
        v = np.zeros(sector.dimension)
        idx = (self.N - self.d) // 2
        v[idx] = self.coefficients
        return v


def gaussian_state(N: int, sigma2: float, excited: int = 0) -> GaussianState:
    """c_d proportional to exp(-d^2/(4 sigma2)) on |d| <= sigma2 with N - s + d even."""
    if sigma2 < 1:
        raise ValueError("sigma2 must be >= 1")
    n_low = N - excited
    bound = min(math.floor(sigma2), n_low)
    d = np.arange(-bound, bound + 1)
    d = d[(n_low + d) % 2 == 0]
    c = np.exp(-d.astype(float) ** 2 / (4 * sigma2))
    c /= np.sqrt(np.sum(c * c))
    return GaussianState(N, float(sigma2), excited, d, c)


def choose_sigma2(N: int, gap: float, delta: float, rule: str = "delta2", constant: float = 1.0) -> float:
    """Variance parameter for the Gaussian trial state.

    ``rule="delta2"``: sqrt(gap)*N when delta < 2, else ``constant``.
    ``rule="delta1"``: sqrt(gap)*N when delta < 1, else sqrt(N).
    ``gap`` is mu_minus - mu_plus.
    """
    if rule == "delta2":
        return math.sqrt(gap) * N if delta < 2 else float(constant)
    if rule == "delta1":
        return math.sqrt(gap) * N if delta < 1 else math.sqrt(N)
    raise ValueError(f"unknown rule {rule!r}")


def tunneling_sum(state: GaussianState, kappa: int) -> float:
    """sum_d c_d c_{d+kappa}."""
    lookup = dict(zip(state.d.tolist(), state.coefficients.tolist()))
    return float(sum(c * lookup.get(d + kappa, 0.0) for d, c in lookup.items()))


def gaussian_expectations(state: GaussianState, h=None, w=None, lam: float = 0.0) -> dict:
    """Expectation values in the Gaussian trial state, by direct summation."""
    N = state.N
    d = state.d.astype(float)
    c = state.coefficients
    lookup = dict(zip(state.d.tolist(), c.tolist()))
    # <a1^dag a2 + a2^dag a1> = 2 sum_d c_d c_{d+2} sqrt((N+d+2)/2 (N-d)/2)
    hop = 0.0
    for dd, cd in lookup.items():
        nxt = lookup.get(dd + 2)
        if nxt is not None:
            hop += 2 * cd * nxt * math.sqrt((N + dd + 2) / 2 * (N - dd) / 2)
    S = TwoModeSector(N)
    v = state.sector_vector(S)
    J = S.hopping()
    Jv = J @ v
    out = {
        "hopping": hop,
        "hopping_quadratic_form": float(v @ Jv),
        "difference_sq": float(np.sum(d * d * c * c)),
        # fsum: the terms cancel pairwise, plain summation leaves rounding noise
        "difference_first_moment": math.fsum(d * c * c),
        "difference_third_moment": math.fsum(d ** 3 * c * c),
        "minus_number": 0.5 * (N - hop),
        "minus_number_sq": 0.25 * float(N * N - 2 * N * (v @ Jv) + Jv @ Jv),
        "tunneling_sum_1": tunneling_sum(state, 1),
        "tunneling_sum_2": tunneling_sum(state, 2),
        "norm": float(np.sum(c * c)),
    }
    if h is not None and w is not None:
        H = assemble_H2mode(N, h, w, lam, S)
        out["energy"] = float(v @ (H @ v))
    return out


def squeezing_diagnostic(vector, N1, N2, N: int) -> dict:
    """Number-difference statistics of a normalized state.

    ``N1`` and ``N2`` are the number operators on the space ``vector``
    lives in (two-mode sector or full Fock sector).
    """
    v = np.asarray(vector, dtype=float)
    n1 = N1 @ v
    n2 = N2 @ v
    diff = n1 - n2
    var = float(diff @ diff)
    return {
        "N1": float(v @ n1),
        "N2": float(v @ n2),
        "variance": var,
        "variance_over_N": var / N,
    }


def sector_squeezing(vector, sector: TwoModeSector) -> dict:
    return squeezing_diagnostic(vector, sector.number(1), sector.number(2), sector.N)


def coherent_split_state(sector: TwoModeSector) -> np.ndarray:
    """((u1 + u2)/sqrt2)^{(x)N} in the sector basis (binomial amplitudes)."""
    N = sector.N
    k = np.arange(N + 1)  # n2 = k
    logc = 0.5 * (np.array([math.lgamma(N + 1) - math.lgamma(N - i + 1) - math.lgamma(i + 1) for i in k])
                  - N * math.log(2.0))
    return np.exp(logc)
