"""The acceptance suite: one record per criterion, shared by `verify` and the tests."""

from __future__ import annotations

import math
import platform
import time

import numpy as np
import scipy
from scipy.linalg import eigh_tridiagonal

from .bogoliubov import (QuadraticBlock, bogoliubov_energy, build_blocks, fock_oracle_quadratic,
                         symplectic_diagonalize)
from .config import RunConfig
from .fockspace import verify_conjugation_identities
from .hartree import assemble_linear_hamiltonian, evaluate_potential, trapezoid_weights, verify_onebody_properties
from .io import dumps_json
from .modes import symmetrize_tensor
from .pipeline import exact_ground_state, prepare
from .twomode import (TwoModeSector, assemble_H2mode, assemble_H2mode_rewritten, assemble_HBH,
                      bose_hubbard_closed_form, coefficients_from_arrays, gaussian_expectations,
                      gaussian_state, sector_spectrum, sector_squeezing, square_identity_sides,
                      two_mode_constants)


def record(name, anchor, values, threshold, ok, budget=None, elapsed=None):
    within = True if budget is None else bool(elapsed <= budget)
    rec = {
        "name": name,
        "anchor": anchor,
        "values": values,
        "threshold": threshold,
        "verdict": "pass" if (ok and within) else "fail",
        "pass": bool(ok and within),
    }
    if budget is not None:
        rec["runtime_budget_s"] = budget
        rec["within_budget"] = within
    return rec


class _Clock:
    def __enter__(self):
        self.t = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t


def random_reflection_tensor(rng):
    """Random real (h, w) on two modes, invariant under swapping the modes."""
    h = rng.standard_normal((2, 2))
    h = h + h.T
    h[1, 1] = h[0, 0]
    w = symmetrize_tensor(rng.standard_normal((2,) * 4))
    P = np.array([[0, 1], [1, 0]])
    w = 0.5 * (w + np.einsum("am,bn,cp,dq,mnpq->abcd", P, P, P, P, w))
    return h, w


class Context:
    """Lazily computed, shared pipeline stages."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self._stages = {}

    def stage(self, L=None, lam=None):
        key = (self.cfg.L if L is None else L, self.cfg.lam if lam is None else lam)
        if key not in self._stages:
            self._stages[key] = prepare(self.cfg, L=key[0], lam=key[1])
        return self._stages[key]


def c01_two_mode_identity(ctx: Context):
    st = ctx.stage()  # the mean-field solve is not part of the identity check's budget
    with _Clock() as clk:
        rng = np.random.default_rng(ctx.cfg.seed)
        worst_random = 0.0
        for N in range(2, 9):
            S = TwoModeSector(N)
            for _ in range(20):
                h, w = random_reflection_tensor(rng)
                lam = float(rng.uniform(0.1, 1.0))
                c = coefficients_from_arrays(h, w)
                k = two_mode_constants(c, lam, N)
                A = assemble_H2mode(N, h, w, lam, S)
                B = assemble_H2mode_rewritten(N, k, c["w1122"], S)
                worst_random = max(worst_random, float(abs(A - B).max()))
        c = coefficients_from_arrays(st.tensor.h, st.tensor.w)
        half_gap = 0.5 * (st.mu_plus - st.mu_minus)
        worst_phys = 0.0
        for N in range(2, 9):
            S = TwoModeSector(N)
            k = two_mode_constants(c, st.lam, N, half_gap=half_gap)
            A = assemble_H2mode(N, st.tensor.h, st.tensor.w, st.lam, S)
            B = assemble_H2mode_rewritten(N, k, c["w1122"], S)
            worst_phys = max(worst_phys, float(abs(A - B).max()))
    ok = worst_random <= 1e-10 and worst_phys <= 1e-10
    return record("two_mode_identity", "two-mode Hamiltonian rewritten in hopping/imbalance form",
                  {"max_defect_random": worst_random, "max_defect_physical": worst_phys,
                   "N_range": [2, 8], "random_tensors": 20},
                  {"max_defect": 1e-10}, ok, 5.0, clk.elapsed)


def c02_square_identity(ctx: Context):
    with _Clock() as clk:
        worst = 0.0
        for N in range(1, 13):
            l, r = square_identity_sides(TwoModeSector(N))
            worst = max(worst, float(abs(l - r).max()))
    return record("square_identity", "squared hopping term in terms of hopping and N_minus",
                  {"max_defect": worst, "N_range": [1, 12]}, {"max_defect": 1e-10},
                  worst <= 1e-10, 1.0, clk.elapsed)


def c03_excitation_map(ctx: Context):
    with _Clock() as clk:
        per_N = {}
        for N in range(2, 6):
            per_N[str(N)] = verify_conjugation_identities(N, 3)
    worst = max(v["max_defect"] for v in per_N.values())
    keys = sorted(next(iter(per_N.values())))
    values = {k: max(v[k] for v in per_N.values()) for k in keys}
    values["N_range"] = [2, 5]
    values["excited_modes"] = 3
    return record("excitation_map", "conjugation of ladder operators by the excitation map",
                  values, {"max_defect": 1e-10}, worst <= 1e-10, 30.0, clk.elapsed)


def c04_gaussian_state(ctx: Context):
    with _Clock() as clk:
        N = 10_000
        rows = []
        for s2 in (16, 64, 256):
            g = gaussian_state(N, s2)
            e = gaussian_expectations(g)
            # brute force: hopping matrix element on the sector vector
            hop_brute = e["hopping_quadratic_form"]
            rows.append({
                "sigma2": s2,
                "first_moment": e["difference_first_moment"],
                "third_moment": e["difference_third_moment"],
                "tunneling_defect": abs(e["tunneling_sum_2"] - 1),
                "tunneling_defect_times_sigma2": abs(e["tunneling_sum_2"] - 1) * s2,
                "variance_over_sigma2": e["difference_sq"] / s2,
                "hopping_direct_vs_matrix": abs(e["hopping"] - hop_brute),
            })
    ok = all(abs(r["first_moment"]) <= 1e-14 and abs(r["third_moment"]) <= 1e-14
             and r["tunneling_defect"] <= 4 / r["sigma2"]
             and 0.3 <= r["variance_over_sigma2"] <= 1.1
             and r["hopping_direct_vs_matrix"] <= 1e-8 * N for r in rows)
    return record("gaussian_state", "Gaussian trial-state moments and tunneling sums",
                  {"N": N, "points": rows},
                  {"odd_moments": 1e-14, "tunneling_defect": "4/sigma2",
                   "variance_over_sigma2": [0.3, 1.1]}, ok, 5.0, clk.elapsed)


def c05_bogoliubov_oracle(ctx: Context):
    with _Clock() as clk:
        b = QuadraticBlock("right", np.array([[1.0]]), np.array([[0.5]]), 1.0)
        e1 = bogoliubov_energy(b)
        o1 = fock_oracle_quadratic(b, 60)
        d1 = symplectic_diagonalize(b)
        scalar = -0.5 * (1.5 - math.sqrt(2.0))
        rng = np.random.default_rng(ctx.cfg.seed + 5)
        blocks = []
        for _ in range(5):
            Q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
            D = Q @ np.diag(rng.uniform(1, 3, 3)) @ Q.T
            Q = np.linalg.qr(rng.standard_normal((3, 3)))[0]
            V = Q @ np.diag(rng.uniform(0, 0.5, 3)) @ Q.T
            blk = QuadraticBlock("right", 0.5 * (D + D.T), 0.5 * (V + V.T), 1.0)
            e = bogoliubov_energy(blk)
            o = fock_oracle_quadratic(blk, 40)
            d = symplectic_diagonalize(blk)
            blocks.append({"energy": e, "oracle_defect": abs(o.energy - e),
                           "route_defect": abs(d.energy - e), "symplectic": d.checks["symplectic"]})
    oracle = max([abs(o1.energy - e1)] + [r["oracle_defect"] for r in blocks])
    route = max([abs(d1.energy - e1)] + [r["route_defect"] for r in blocks])
    sympl = max([d1.checks["symplectic"]] + [r["symplectic"] for r in blocks])
    ok = oracle <= 1e-6 and route <= 1e-8 and sympl <= 1e-8 and abs(e1 - scalar) <= 1e-8
    return record("bogoliubov_oracle", "quadratic block energy against truncated Fock diagonalization",
                  {"scalar_energy": e1, "scalar_target": scalar, "scalar_oracle": o1.energy,
                   "max_oracle_defect": oracle, "max_route_defect": route,
                   "max_symplectic_defect": sympl, "random_blocks": blocks},
                  {"oracle": 1e-6, "route": 1e-8, "symplectic": 1e-8}, ok, 60.0, clk.elapsed)


def _linear_ground(grid, params):
    H = assemble_linear_hamiltonian(grid, evaluate_potential(grid.nodes, params))
    vals, vecs = eigh_tridiagonal(H.diagonal(), H.diagonal(1), select="i", select_range=(0, 0))
    v = np.zeros(grid.points)
    v[1:-1] = vecs[:, 0]
    v = 0.5 * (v + v[::-1])  # even part; the u_+/u_- pair can mix when the gap is tiny
    v /= math.sqrt(float(np.sum(trapezoid_weights(grid) * v * v)))
    if v[grid.center] < 0:
        v = -v
    return float(vals[0]), v


def c06_zero_coupling(ctx: Context):
    cfg = ctx.cfg
    st = ctx.stage(lam=0.0)
    right, left = build_blocks(st.basis, st.kernels, 0.0, cfg.M)
    Eb = bogoliubov_energy(right) + bogoliubov_energy(left)
    mu_lin, v_lin = _linear_ground(st.grid, st.params)
    u = st.solution.u_plus
    u = u if u[st.grid.center] >= 0 else -u
    mu_defect = abs(st.solution.mu_plus - mu_lin)
    vec_defect = float(np.abs(u - v_lin).max())
    N = cfg.N_two_mode
    Hbh = assemble_HBH(N, 1.0, st.mu_plus, st.mu_minus, 0.0)
    Ebh = float(sector_spectrum(Hbh, 1)[0][0])
    bh_defect = abs(Ebh - N * (st.mu_plus - st.mu_minus) / 2)
    ok = abs(Eb) <= 1e-12 and mu_defect <= 1e-10 and vec_defect <= 1e-10 and bh_defect <= 1e-10 * N
    return record("zero_coupling", "lambda = 0 reductions",
                  {"E_bog": Eb, "hartree_vs_linear_eigenvalue": mu_defect,
                   "hartree_vs_linear_vector": vec_defect, "E_BH_defect": bh_defect, "N": N},
                  {"E_bog": 1e-12, "hartree": 1e-10, "E_BH": "1e-10*N"}, ok)


def c07_reflection(ctx: Context):
    cfg = ctx.cfg
    st = ctx.stage()
    right, left = build_blocks(st.basis, st.kernels, st.lam, cfg.M)
    dE = abs(bogoliubov_energy(right) - bogoliubov_energy(left))
    ex = exact_ground_state(st, cfg.N, tol=cfg.tol_lanczos, seed=cfg.seed)
    N2 = cfg.N_two_mode
    S = TwoModeSector(N2)
    _, v2 = sector_spectrum(assemble_H2mode(N2, st.tensor.h, st.tensor.w, st.lam, S), 1)
    c = coefficients_from_arrays(st.tensor.h, st.tensor.w)
    _, vb = sector_spectrum(assemble_HBH(N2, c["w1111"], st.mu_plus, st.mu_minus, st.lam, S), 1)
    q2 = sector_squeezing(v2[:, 0], S)
    qb = sector_squeezing(vb[:, 0], S)
    imb = {
        "exact": abs(ex.N1 - ex.N2) / cfg.N,
        "two_mode": abs(q2["N1"] - q2["N2"]) / N2,
        "bose_hubbard": abs(qb["N1"] - qb["N2"]) / N2,
    }
    ok = dE <= 1e-8 and max(imb.values()) <= 1e-8
    return record("reflection_symmetry", "right/left mirror symmetry of blocks and ground states",
                  {"block_energy_difference": dE, "occupation_imbalance_over_N": imb},
                  {"block_energy": 1e-8, "occupation": "1e-8*N"}, ok)


def c08_onebody_trends(ctx: Context):
    with _Clock() as clk:
        spectra = [ctx.stage(L=L, lam=0.1).spectrum for L in (6.0, 8.0, 10.0)]
        rep = verify_onebody_properties(spectra)
    spread = rep["second_gap_spread"]
    ok = 0.7 <= rep["gap_slope"] <= 1.3 and spread < 0.2 and rep["l1_strictly_decreasing"]
    values = {k: rep[k] for k in ("separations", "tunneling", "gap", "gap_slope", "second_gap",
                                  "second_gap_spread", "l1_difference", "l1_strictly_decreasing")}
    return record("onebody_trends", "gap, second gap and density overlap across separations",
                  values, {"gap_slope": [0.7, 1.3], "second_gap_spread": 0.2, "l1": "strictly decreasing"},
                  ok, 120.0, clk.elapsed)


def c09_number_squeezing(ctx: Context):
    with _Clock() as clk:
        N = 1000
        coupling = 0.4
        var = []
        for T in (1e-2, 1e-3, 1e-4):
            S = TwoModeSector(N)
            _, v = sector_spectrum(assemble_HBH(N, 1.0, 0.0, T, coupling, S), 1)
            var.append(sector_squeezing(v[:, 0], S)["variance_over_N"])
        res = []
        for Nn in (250, 500, 1000):
            T = float(Nn) ** -2
            E = float(sector_spectrum(assemble_HBH(Nn, 1.0, 0.0, T, coupling), 1)[0][0])
            res.append(abs(E - bose_hubbard_closed_form(Nn, 1.0, 0.0, T, coupling)))
    ok = (all(b < a for a, b in zip(var, var[1:])) and max(var) <= 0.25
          and all(b < a for a, b in zip(res, res[1:])))
    return record("number_squeezing", "Bose-Hubbard ground-state imbalance variance",
                  {"N": N, "T": [1e-2, 1e-3, 1e-4], "variance_over_N": var,
                   "closed_form_N": [250, 500, 1000], "closed_form_residual": res},
                  {"variance_over_N": 0.25, "trend": "strictly decreasing"}, ok, 60.0, clk.elapsed)


def c10_full_stack(ctx: Context):
    cfg = ctx.cfg
    with _Clock() as clk:
        pts = []
        for lam in (cfg.lam, cfg.lam / 2):
            st = ctx.stage(lam=lam)
            ex = exact_ground_state(st, cfg.N, tol=cfg.tol_lanczos, seed=cfg.seed)
            pts.append({"lambda": lam, "E_exact": ex.energy, "E_2mode": ex.E_2mode, "E_bog": ex.E_bog,
                        "residual": abs(ex.energy - (ex.E_2mode + ex.E_bog)),
                        "dimension": ex.basis.dimension})
    ok = all(p["E_exact"] <= p["E_2mode"] for p in pts) and pts[1]["residual"] < pts[0]["residual"]
    return record("full_stack", "full Fock energy against two-mode plus Bogoliubov energies",
                  {"N": cfg.N, "M_tot": cfg.M_tot, "points": pts},
                  {"variational": "E_exact <= E_2mode", "trend": "residual decreases when lambda halves"},
                  ok, 300.0, clk.elapsed)


CRITERIA = (c01_two_mode_identity, c02_square_identity, c03_excitation_map, c04_gaussian_state,
            c05_bogoliubov_oracle, c06_zero_coupling, c07_reflection, c08_onebody_trends,
            c09_number_squeezing, c10_full_stack)


def run_criteria(cfg: RunConfig) -> list:
    ctx = Context(cfg)
    return [fn(ctx) for fn in CRITERIA]


def environment() -> dict:
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def build_report(cfg: RunConfig, check_determinism: bool = True) -> dict:
    """Run every criterion; the determinism criterion reruns the suite and compares bytes."""
    records = run_criteria(cfg)
    if check_determinism:
        first = dumps_json(records)
        second = dumps_json(run_criteria(cfg))
        same = first == second
        records.append(record("determinism", "byte-identical reruns",
                              {"identical": same, "bytes": len(first.encode("utf-8"))},
                              {"identical": True}, same))
    return {
        "schema": 1,
        "config_hash": cfg.hash,
        "config": dict(cfg.raw),
        "environment": environment(),
        "records": records,
        "all_pass": all(r["pass"] for r in records),
    }
