"""Bosonic occupation bases, ladder operators and exact ground states.

Basis ordering: occupation vectors in *descending* lexicographic order, so
the first state of the N-sector is (N, 0, ..., 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh, eigh_tridiagonal

DEFAULT_CAP = 2_000_000


class SizingError(ValueError):
    def __init__(self, dimension, cap):
        super().__init__(f"Fock sector of dimension {dimension} exceeds the cap {cap}")
        self.dimension = dimension


def sector_dimension(N: int, M: int) -> int:
    return math.comb(N + M - 1, N)


def _occupations(N: int, M: int) -> np.ndarray:
    if M == 1:
        return np.array([[N]], dtype=np.int64)
    blocks = []
    for first in range(N, -1, -1):
        rest = _occupations(N - first, M - 1)
        blocks.append(np.column_stack([np.full(rest.shape[0], first, dtype=np.int64), rest]))
    return np.vstack(blocks)


@dataclass(frozen=True)
class FockBasis:
    mode_count: int
    particle_number: int
    states: np.ndarray = field(repr=False)
    _keys: np.ndarray = field(repr=False)
    _order: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.states.shape[0]

    def _encode(self, occ) -> np.ndarray:
        occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
        base = self.particle_number + 1
        powers = base ** np.arange(self.mode_count, dtype=np.int64)
        return occ @ powers

    def index_of(self, occ) -> np.ndarray:
        """Row index of each occupation vector; -1 if not in the sector."""
        keys = self._encode(occ)
        pos = np.searchsorted(self._keys, keys)
        pos = np.clip(pos, 0, self._keys.size - 1)
        found = self._keys[pos] == keys
        return np.where(found, self._order[pos], -1)

    def index(self, occ) -> int:
        i = int(self.index_of(occ)[0])
        if i < 0:
            raise KeyError(tuple(occ))
        return i


def enumerate_basis(N: int, M: int, cap: int = DEFAULT_CAP) -> FockBasis:
    if N < 0 or M < 1:
        raise ValueError("need N >= 0 and M >= 1")
    dim = sector_dimension(N, M)
    if dim > cap:
        raise SizingError(dim, cap)
    if (N + 1) ** M >= 2 ** 62:
        raise SizingError(dim, cap)  # key encoding would overflow
    states = _occupations(N, M)
    base = N + 1
    keys = states @ (base ** np.arange(M, dtype=np.int64))
    order = np.argsort(keys, kind="stable")
    return FockBasis(M, N, states, keys[order], order)


def lowering(source: FockBasis, target: FockBasis, m: int) -> sp.csr_matrix:
    """a_m from ``source`` (N particles) to ``target`` (N-1 particles)."""
    occ = source.states
    rows_from = np.nonzero(occ[:, m] > 0)[0]
    new = occ[rows_from].copy()
    vals = np.sqrt(new[:, m].astype(float))
    new[:, m] -= 1
    rows_to = target.index_of(new)
    return sp.csr_matrix((vals, (rows_to, rows_from)),
                         shape=(target.dimension, source.dimension))


class FockOperatorSet:
    """Ladder operators on the union of sectors 0..N_max (creation out of
    the top sector is dropped)."""

    def __init__(self, M: int, N_max: int, cap: int = DEFAULT_CAP):
        self.M = M
        self.N_max = N_max
        self.sectors = [enumerate_basis(k, M, cap) for k in range(N_max + 1)]
        dims = [b.dimension for b in self.sectors]
        self.offsets = np.concatenate([[0], np.cumsum(dims)])
        self.dimension = int(self.offsets[-1])
        self._lower = {}

    def sector_lowering(self, k: int, m: int) -> sp.csr_matrix:
        """a_m restricted to sector k -> k-1."""
        key = (k, m)
        if key not in self._lower:
            self._lower[key] = lowering(self.sectors[k], self.sectors[k - 1], m)
        return self._lower[key]

    def annihilation(self, m: int) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for k in range(1, self.N_max + 1):
            A = self.sector_lowering(k, m).tocoo()
            rows.append(A.row + self.offsets[k - 1])
            cols.append(A.col + self.offsets[k])
            vals.append(A.data)
        if not rows:
            return sp.csr_matrix((self.dimension, self.dimension))
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.dimension, self.dimension))

    def creation(self, m: int) -> sp.csr_matrix:
        return self.annihilation(m).T.tocsr()

    def number(self, m: int) -> sp.csr_matrix:
        occ = np.concatenate([b.states[:, m] for b in self.sectors]).astype(float)
        return sp.diags(occ, format="csr")

    def total_number(self) -> np.ndarray:
        return np.concatenate([np.full(b.dimension, b.particle_number) for b in self.sectors])

    def ccr_defect(self) -> float:
        """max |<s|[a_m, a_n^dag] - delta_mn|s>| over states below the top sector."""
        below = self.total_number() < self.N_max
        worst = 0.0
        a = [self.annihilation(m) for m in range(self.M)]
        for m in range(self.M):
            for n in range(self.M):
                C = (a[m] @ a[n].T - a[n].T @ a[m]).toarray()
                if m == n:
                    C -= np.eye(self.dimension)
                worst = max(worst, float(np.abs(C[below][:, below]).max(initial=0.0)))
        return worst


def one_body_operator(sector_N: FockBasis, sector_Nm1: FockBasis, m: int, n: int) -> sp.csr_matrix:
    """a_m^dag a_n on a fixed sector."""
    return (lowering(sector_N, sector_Nm1, m).T @ lowering(sector_N, sector_Nm1, n)).tocsr()


def assemble_HN(h, w, lam: float, N: int, cap: int = DEFAULT_CAP):
    """Sum h_mn a_m^dag a_n + lam/(2(N-1)) sum w_mnpq a_m^dag a_n^dag a_p a_q.

    ``h`` (M, M) and ``w`` (M, M, M, M) are coefficient arrays in whatever
    orthonormal mode basis the caller chose.  Returns ``(H, basis)``.
    """
    if N < 2:
        raise ValueError("need N >= 2")
    h = np.asarray(h, dtype=float)
    w = np.asarray(w, dtype=float)
    M = h.shape[0]
    bN = enumerate_basis(N, M, cap)
    b1 = enumerate_basis(N - 1, M, cap)
    b2 = enumerate_basis(N - 2, M, cap)
    low1 = [lowering(bN, b1, m) for m in range(M)]
    low2 = [lowering(b1, b2, m) for m in range(M)]

    H = sp.csr_matrix((bN.dimension, bN.dimension))
    for m in range(M):
        for n in range(M):
            if h[m, n] != 0.0:
                H = H + h[m, n] * (low1[m].T @ low1[n])

    # pair annihilators a_p a_q : N -> N-2, stacked over (p, q)
    pairs = [low2[p] @ low1[q] for p in range(M) for q in range(M)]
    B = sp.vstack(pairs, format="csr")
    Wmat = w.reshape(M * M, M * M)
    C = sp.kron(sp.csr_matrix(Wmat), sp.identity(b2.dimension, format="csr"), format="csr") @ B
    H2 = (B.T @ C).tocsr()
    H = (H + lam / (2.0 * (N - 1)) * H2).tocsr()
    H = (0.5 * (H + H.T)).tocsr()
    H.sum_duplicates()
    H.sort_indices()
    return H, bN


def hermiticity_defect(H) -> float:
    D = H - H.T
    return float(np.abs(D.data).max(initial=0.0)) if sp.issparse(D) else float(np.abs(D).max())


# -- Lanczos -----------------------------------------------------------------

@dataclass(frozen=True)
class GroundState:
    energy: float
    vector: np.ndarray
    residual: float
    second: float
    degenerate: bool
    iterations: int


class LanczosError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def _seed(dim: int, seed: int) -> np.ndarray:
    v = np.zeros(dim)
    v[0] = 1.0
    v += 1e-3 * np.random.default_rng(seed).standard_normal(dim)
    return v / np.linalg.norm(v)


def _deflated(H, x, shift):
    """H restricted to the complement of x, with x itself pushed up to ``shift``."""
    def mv(v):
        v = np.ravel(v)
        p = v - x * (x @ v)
        Hp = H @ p
        return Hp - x * (x @ Hp) + shift * x * (x @ v)
    return spla.LinearOperator(H.shape, matvec=mv, dtype=float)


def ground_state(H, tol: float = 1e-10, max_krylov: int = 300, max_restarts: int = 60,
                 seed: int = 20240917, v0=None, check_gap: bool = True) -> GroundState:
    """Lowest eigenpair by Lanczos with full reorthogonalization.

    Restarted from the current Ritz vector when the Krylov space is full.
    With ``check_gap`` the second eigenvalue comes from a second Lanczos run
    on the deflated operator; a single Krylov space sees each eigenvalue of
    an exactly degenerate level only once.
    """
    dim = H.shape[0]
    if dim == 0:
        raise ValueError("empty operator")
    if dim <= 2:
        A = H.toarray() if sp.issparse(H) else np.asarray(H, dtype=float)
        vals, vecs = eigh(A)
        second = float(vals[1]) if dim > 1 else math.inf
        return GroundState(float(vals[0]), vecs[:, 0], 0.0, second,
                           bool(second - vals[0] <= 10 * tol), 0)
    v = _seed(dim, seed) if v0 is None else np.asarray(v0, dtype=float) / np.linalg.norm(v0)
    kmax = min(dim, max_krylov)
    total = 0
    res = math.inf
    for restart in range(max_restarts):
        V = np.zeros((kmax, dim))
        alpha = np.zeros(kmax)
        beta = np.zeros(kmax)
        V[0] = v
        k = 0
        for j in range(kmax):
            wv = H @ V[j]
            total += 1
            alpha[j] = V[j] @ wv
            wv = wv - V[: j + 1].T @ (V[: j + 1] @ wv)
            wv = wv - V[: j + 1].T @ (V[: j + 1] @ wv)
            b = np.linalg.norm(wv)
            k = j + 1
            if j + 1 < kmax:
                beta[j] = b
            if b < 1e-14 * max(1.0, abs(alpha[j])):
                beta[j] = 0.0
                break
            if j + 1 < kmax:
                V[j + 1] = wv / b
            if k >= 2 and (k % 10 == 0 or j + 1 == kmax):
                theta, S = eigh_tridiagonal(alpha[:k], beta[: k - 1])
                scale = max(abs(theta[0]), abs(theta[-1]), 1.0)
                if abs(b * S[-1, 0]) <= 0.1 * tol * scale:
                    break
        theta, S = eigh_tridiagonal(alpha[:k], beta[: k - 1]) if k > 1 else (alpha[:1], np.ones((1, 1)))
        x = V[:k].T @ S[:, 0]
        x /= np.linalg.norm(x)
        Hx = H @ x
        E = float(x @ Hx)
        scale = max(abs(theta[0]), abs(theta[-1]), 1.0)
        res = float(np.linalg.norm(Hx - E * x))
        if res <= tol * scale:
            second = float(theta[1]) if theta.size > 1 else math.inf
            if check_gap:
                shift = abs(theta[-1]) + abs(E) + 1.0
                g2 = ground_state(_deflated(H, x, shift), tol=tol, max_krylov=max_krylov,
                                  max_restarts=max_restarts, seed=seed + 1, check_gap=False)
                second = min(second, g2.energy)
                total += g2.iterations
            deg = bool(second - E <= 10 * tol * scale)
            return GroundState(E, x, res, second, deg, total)
        v = x
    raise LanczosError(f"Lanczos did not converge, residual {res:.3e}", res)


# -- excitation map ----------------------------------------------------------

class ExcitationSpace:
    """Finite window of the families Phi_{s,d}: s = 0..N, d = -(N+2)..N+2.

    Both parities of d are present so that odd powers of the shift have
    somewhere to land; U_N maps onto the admissible blocks only.
    """

    def __init__(self, N: int, M_exc: int):
        self.N = N
        self.M_exc = M_exc
        self.d_min, self.d_max = -(N + 2), N + 2
        self.exc = [enumerate_basis(s, M_exc) for s in range(N + 1)]
        self.blocks = []  # (s, d, offset, size)
        self._offset = {}
        off = 0
        for s in range(N + 1):
            size = self.exc[s].dimension
            for d in range(self.d_min, self.d_max + 1):
                self._offset[(s, d)] = off
                self.blocks.append((s, d, off, size))
                off += size
        self.dimension = off

    def admissible(self, s: int, d: int) -> bool:
        return abs(d) <= self.N - s and (self.N - s + d) % 2 == 0

    def offset(self, s: int, d: int) -> int:
        return self._offset[(s, d)]

    def _diag(self, f):
        vals = np.empty(self.dimension)
        for s, d, off, size in self.blocks:
            vals[off: off + size] = f(s, d)
        return sp.diags(vals, format="csr")

    def difference(self):
        return self._diag(lambda s, d: d)

    def excited_number(self):
        return self._diag(lambda s, d: s)

    def function_of(self, f):
        """Diagonal operator f(N_perp, D)."""
        return self._diag(f)

    def shift(self) -> sp.csr_matrix:
        """(Theta Phi)_{s,d} = Phi_{s,d-1}; components pushed past d_max are dropped."""
        rows, cols = [], []
        for s, d, off, size in self.blocks:
            if d - 1 >= self.d_min:
                src = self.offset(s, d - 1)
                rows.append(np.arange(off, off + size))
                cols.append(np.arange(src, src + size))
        r, c = np.concatenate(rows), np.concatenate(cols)
        return sp.csr_matrix((np.ones(r.size), (r, c)), shape=(self.dimension, self.dimension))

    def annihilation(self, m: int) -> sp.csr_matrix:
        """a_m for an excited mode (0-based among the excited modes)."""
        rows, cols, vals = [], [], []
        for s in range(1, self.N + 1):
            A = lowering(self.exc[s], self.exc[s - 1], m).tocoo()
            for d in range(self.d_min, self.d_max + 1):
                rows.append(A.row + self.offset(s - 1, d))
                cols.append(A.col + self.offset(s, d))
                vals.append(A.data)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.dimension, self.dimension))

    def embedding(self, basis: FockBasis) -> sp.csr_matrix:
        """U_N as a (window x sector) 0/1 matrix; basis modes are (u1, u2, excited...)."""
        if basis.mode_count != self.M_exc + 2 or basis.particle_number != self.N:
            raise ValueError("basis does not match the excitation space")
        occ = basis.states
        rows = np.empty(basis.dimension, dtype=np.int64)
        for i, o in enumerate(occ):
            s = int(o[2:].sum())
            d = int(o[0] - o[1])
            rows[i] = self.offset(s, d) + self.exc[s].index(o[2:])
        return sp.csr_matrix((np.ones(basis.dimension), (rows, np.arange(basis.dimension))),
                             shape=(self.dimension, basis.dimension))


@dataclass
class ExcitationRepresentation:
    space: ExcitationSpace
    vector: np.ndarray

    def component(self, s: int, d: int) -> np.ndarray:
        off = self.space.offset(s, d)
        return self.vector[off: off + self.space.exc[s].dimension]

    def norms(self) -> dict:
        """{(s, d): ||Phi_{s,d}||^2} over admissible nonzero blocks."""
        out = {}
        for s, d, off, size in self.space.blocks:
            val = float(np.sum(self.vector[off: off + size] ** 2))
            if val > 0:
                out[(s, d)] = val
        return out


def excitation_map(psi, basis: FockBasis, space: ExcitationSpace | None = None) -> ExcitationRepresentation:
    if space is None:
        space = ExcitationSpace(basis.particle_number, basis.mode_count - 2)
    J = space.embedding(basis)
    return ExcitationRepresentation(space, J @ np.asarray(psi, dtype=float))


def excitation_inverse(rep: ExcitationRepresentation, basis: FockBasis) -> np.ndarray:
    return rep.space.embedding(basis).T @ rep.vector


def _sqrt_pos(x):
    return math.sqrt(max(0.0, x))


def verify_conjugation_identities(N: int, M_exc: int) -> dict:
    """Max defect of each conjugation identity, as matrices on Ran U_N."""
    M = M_exc + 2
    ops = FockOperatorSet(M, N)
    bN, b1 = ops.sectors[N], ops.sectors[N - 1]
    low = [lowering(bN, b1, m) for m in range(M)]

    def E(m, n):
        return (low[m].T @ low[n]).tocsr()

    space = ExcitationSpace(N, M_exc)
    J = space.embedding(bN)
    Dop, Nperp, Th = space.difference(), space.excited_number(), space.shift()
    ThInv = Th.T.tocsr()
    f_plus = space.function_of(lambda s, d: _sqrt_pos((N - s + d + 1) / 2))
    f_minus = space.function_of(lambda s, d: _sqrt_pos((N - s - d + 1) / 2))
    I = sp.identity(space.dimension, format="csr")
    a_exc = [space.annihilation(m) for m in range(M_exc)]

    def defect(rhs, lhs):
        D = (rhs @ J - J @ lhs)
        return float(np.abs(D.toarray()).max(initial=0.0))

    out = {}
    out["n1"] = defect((N * I - Nperp + Dop) / 2, E(0, 0))
    out["hop12"] = defect(Th @ f_plus @ f_minus @ Th, E(0, 1))
    out["n2"] = defect((N * I - Nperp - Dop) / 2, E(1, 1))
    out["a1dag_am"] = max(defect(Th @ f_plus @ a_exc[m], E(0, m + 2)) for m in range(M_exc))
    out["a2dag_am"] = max(defect(ThInv @ f_minus @ a_exc[m], E(1, m + 2)) for m in range(M_exc))
    out["amdag_an"] = max(defect(a_exc[m].T @ a_exc[n], E(m + 2, n + 2))
                          for m in range(M_exc) for n in range(M_exc))
    out["n_perp"] = defect(Nperp, sum(E(m + 2, m + 2) for m in range(M_exc)))

    def mat_defect(A):
        return float(np.abs(A.toarray()).max(initial=0.0))

    out["commutator_D_theta"] = mat_defect(Dop @ Th - Th @ Dop - Th)
    out["commutator_a_theta"] = max(mat_defect(a @ Th - Th @ a) for a in a_exc)
    out["commutator_D_a"] = max(mat_defect(Dop @ a - a @ Dop) for a in a_exc)
    out["partial_isometry"] = mat_defect(J.T @ J - sp.identity(bN.dimension))
    rng = np.random.default_rng(7)
    psi = rng.standard_normal(bN.dimension)
    rep = excitation_map(psi, bN, space)
    out["norm_defect"] = abs(sum(rep.norms().values()) - float(psi @ psi))
    out["round_trip"] = float(np.abs(excitation_inverse(rep, bN) - psi).max())
    out["max_defect"] = max(out.values())
    return out
