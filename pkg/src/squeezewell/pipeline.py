"""End-to-end stages: Hartree -> modes -> two-mode / Bogoliubov / full Fock."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bogoliubov import (block_kernels, bogoliubov_energy, build_blocks, fock_oracle_quadratic,
                         neglected_couplings, shift_and_variance, stability_threshold,
                         symplectic_diagonalize)
from .config import RunConfig
from .fockspace import assemble_HN, excitation_map, ground_state
from .hartree import (DoubleWellParams, GridSpec, InteractionKernel, hartree_minimize,
                      l1_density_difference, mean_field_spectrum)
from .modes import (build_mode_basis, compute_coefficient_tensor, compute_kernel_operators,
                    two_mode_coefficients)
from .twomode import (assemble_H2mode, assemble_HBH, bose_hubbard_closed_form, sector_spectrum,
                      sector_squeezing, TwoModeSector)

# lam grid for the stability threshold, log-spaced
LAMBDA_GRID = np.geomspace(1e-3, 1e3, 121)


@dataclass
class Stage:
    params: DoubleWellParams
    grid: GridSpec
    kernel: InteractionKernel
    solution: object
    spectrum: object
    basis: object
    tensor: object
    kernels: object

    @property
    def lam(self) -> float:
        return self.params.coupling

    @property
    def mu_plus(self) -> float:
        return float(self.spectrum.eigenvalues[0])

    @property
    def mu_minus(self) -> float:
        return float(self.spectrum.eigenvalues[1])


def prepare(cfg: RunConfig, L: float | None = None, lam: float | None = None,
            M_tot: int | None = None, N: int | None = None) -> Stage:
    L = cfg.L if L is None else L
    lam = cfg.lam if lam is None else lam
    M_tot = cfg.M_tot if M_tot is None else M_tot
    N = cfg.N if N is None else N
    params = DoubleWellParams(L, cfg.s, lam, N)
    X = cfg.X if L == cfg.L else L / 2 + (cfg.X - cfg.L / 2)
    grid = GridSpec(X, cfg.n)
    kernel = InteractionKernel(cfg.w0, cfg.R)
    sol = hartree_minimize(grid, params, kernel, tol=cfg.tol_hartree, damping=cfg.damping,
                           max_iter=cfg.max_iter, method=cfg.convolution)
    spectrum = mean_field_spectrum(grid, params, kernel, sol, M_tot, method=cfg.convolution)
    basis = build_mode_basis(spectrum)
    tensor = compute_coefficient_tensor(basis, kernel, grid, params, which="12", method=cfg.convolution)
    kernels = compute_kernel_operators(basis, kernel, grid, method=cfg.convolution)
    return Stage(params, grid, kernel, sol, spectrum, basis, tensor, kernels)


def hartree_summary(stage: Stage) -> dict:
    s = stage.spectrum
    return {
        "L": stage.params.separation,
        "lambda": stage.lam,
        "mu_plus": stage.mu_plus,
        "mu_minus": stage.mu_minus,
        "gap": s.gap,
        "T": s.tunneling,
        "second_gap": float(s.eigenvalues[2] - s.eigenvalues[1]),
        "l1_difference": l1_density_difference(s),
        "hartree_energy": stage.solution.hartree_energy,
        "hartree_residual": stage.solution.residual,
        "iterations": stage.solution.iterations,
        "eigen_residual_max": float(np.max(s.residuals())),
    }


TWO_MODE_COLUMNS = ["N", "L", "T", "lambda", "E_2mode", "E_BH", "variance", "variance_over_N",
                    "closed_form_residual"]


def two_mode_row(stage: Stage, N: int) -> dict:
    c = two_mode_coefficients(stage.tensor)
    S = TwoModeSector(N)
    lam = stage.lam
    E2, _ = sector_spectrum(assemble_H2mode(N, stage.tensor.h, stage.tensor.w, lam, S), 1)
    Hbh = assemble_HBH(N, c["w1111"], stage.mu_plus, stage.mu_minus, lam, S)
    Ebh, vb = sector_spectrum(Hbh, 1)
    sq = sector_squeezing(vb[:, 0], S)
    closed = bose_hubbard_closed_form(N, c["w1111"], stage.mu_plus, stage.mu_minus, lam)
    return {
        "N": N, "L": stage.params.separation, "T": stage.spectrum.tunneling, "lambda": lam,
        "E_2mode": float(E2[0]), "E_BH": float(Ebh[0]), "variance": sq["variance"],
        "variance_over_N": sq["variance_over_N"], "closed_form_residual": float(Ebh[0]) - closed,
    }


BOGOLIUBOV_COLUMNS = ["L", "lambda", "M", "E_right", "E_left", "E_bog", "oracle_energy", "oracle_nmax",
                      "xi1_norm", "K12_norm", "variance_coef", "lambda0"]


def bogoliubov_row(stage: Stage, M: int, N: int, oracle_nmax: int) -> dict:
    right, left = build_blocks(stage.basis, stage.kernels, stage.lam, M)
    Er, El = bogoliubov_energy(right), bogoliubov_energy(left)
    neg = neglected_couplings(stage.basis, stage.kernels, M)
    o_r = fock_oracle_quadratic(right, oracle_nmax)
    o_l = fock_oracle_quadratic(left, oracle_nmax)
    sr, sl = shift_and_variance(right, left, stage.basis, stage.kernels, N)
    Kr, Kl, kr, kl = block_kernels(stage.basis, stage.kernels, M)
    U = two_mode_coefficients(stage.tensor)
    U = (U["w1111"] - U["w1212"]) / 4
    lam0 = stability_threshold(right.D, Kr, Kl, kr, kl, U, LAMBDA_GRID)
    return {
        "L": stage.params.separation, "lambda": stage.lam, "M": M, "E_right": Er, "E_left": El,
        "E_bog": Er + El, "oracle_energy": o_r.energy + o_l.energy, "oracle_nmax": oracle_nmax,
        "xi1_norm": neg["xi1_norm"], "K12_norm": neg["K12_norm"],
        "variance_coef": sr.variance_coef + sl.variance_coef, "lambda0": lam0,
        "oracle_converged": bool(o_r.converged and o_l.converged),
        "route_difference": max(abs(symplectic_diagonalize(b).energy - e) for b, e in ((right, Er), (left, El))),
        "shift_residual": max(sr.residual, sl.residual),
        # the criterion still held at the top of the lam grid
        "lambda0_saturated": bool(lam0 >= LAMBDA_GRID[-1]),
    }


def cutoff_sweep(cfg: RunConfig) -> list:
    top = cfg.M
    return list(range(2, top + 1)) if top >= 2 else [top]


@dataclass
class ExactResult:
    energy: float
    E_2mode: float
    E_bog: float
    ground: object
    basis: object
    H: object
    N1: float
    N2: float
    excitation: object


def exact_ground_state(stage: Stage, N: int, tol: float = 1e-10, seed: int = 20240917) -> ExactResult:
    H, basis = assemble_HN(stage.tensor.h, stage.tensor.w, stage.lam, N)
    gs = ground_state(H, tol=tol, seed=seed)
    occ = basis.states
    p = gs.vector ** 2
    S = TwoModeSector(N)
    E2, _ = sector_spectrum(assemble_H2mode(N, stage.tensor.h, stage.tensor.w, stage.lam, S), 1)
    right, left = build_blocks(stage.basis, stage.kernels, stage.lam)
    Eb = bogoliubov_energy(right) + bogoliubov_energy(left)
    rep = excitation_map(gs.vector, basis)
    return ExactResult(gs.energy, float(E2[0]), Eb, gs, basis, H,
                       float(p @ occ[:, 0]), float(p @ occ[:, 1]), rep)


def worker_count() -> int:
    raw = os.environ.get("SQUEEZEWELL_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n >= 1 else (os.cpu_count() or 1)


def run_pool(fn, items):
    """Map in a bounded pool; results come back in input order."""
    items = list(items)
    workers = min(worker_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


SWEEP_COLUMNS = ["point", "L", "lambda", "N", "T", "mu_plus", "mu_minus", "gap", "second_gap",
                 "l1_difference", "w1111", "w1112", "w1122", "w1212", "E_2mode", "E_BH", "variance_over_N"]


def sweep_points(cfg: RunConfig) -> list:
    Ls = cfg.L_sweep or (cfg.L,)
    lams = cfg.lambda_sweep or (cfg.lam,)
    Ns = cfg.N_sweep or (cfg.N_two_mode,)
    return [(L, lam, N) for L in Ls for lam in lams for N in Ns]


def sweep_row(cfg: RunConfig, point) -> dict:
    L, lam, N = point
    st = prepare(cfg, L=L, lam=lam)
    summ = hartree_summary(st)
    c = two_mode_coefficients(st.tensor)
    tm = two_mode_row(st, N)
    return {"L": L, "lambda": lam, "N": N, "T": summ["T"], "mu_plus": summ["mu_plus"],
            "mu_minus": summ["mu_minus"], "gap": summ["gap"], "second_gap": summ["second_gap"],
            "l1_difference": summ["l1_difference"], "w1111": c["w1111"], "w1112": c["w1112"],
            "w1122": c["w1122"], "w1212": c["w1212"], "E_2mode": tm["E_2mode"], "E_BH": tm["E_BH"],
            "variance_over_N": tm["variance_over_N"]}


def run_sweep(cfg: RunConfig) -> list:
    pts = sweep_points(cfg)
    rows = run_pool(lambda p: sweep_row(cfg, p), pts)
    for i, r in enumerate(rows):
        r["point"] = i
    return rows
