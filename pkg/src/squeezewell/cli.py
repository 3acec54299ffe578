"""squeezewell <command> --config <path> [--set key=value]... --out <dir>"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .acceptance import build_report
from .config import COMMANDS, ConfigError, load_config
from .fockspace import LanczosError, SizingError
from .hartree import ConvergenceError
from .pipeline import (BOGOLIUBOV_COLUMNS, SWEEP_COLUMNS, TWO_MODE_COLUMNS, bogoliubov_row, cutoff_sweep,
                       exact_ground_state, hartree_summary, prepare, run_pool, run_sweep, two_mode_row)

USAGE = (
    "usage: squeezewell <command> [--config PATH] [--set KEY=VALUE]... --out DIR\n"
    "commands: " + ", ".join(COMMANDS) + "\n"
)


def _parser():
    p = argparse.ArgumentParser(prog="squeezewell", usage=USAGE)
    p.add_argument("command")
    p.add_argument("--config", default=None)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", required=True)
    return p


def _rows(dicts, columns):
    return [[d[c] for c in columns] for d in dicts]


def cmd_hartree(cfg, out: Path):
    st = prepare(cfg)
    meta = cfg.header()
    io.write_grid_vector(out / "u_plus.csv", st.grid, st.solution.u_plus, meta)
    io.write_spectrum(out, st.spectrum, meta)
    io.write_json(out / "hartree.json", {**meta, **hartree_summary(st),
                                         "energies": list(st.solution.energies)})


def cmd_two_mode(cfg, out: Path):
    st = prepare(cfg)
    meta = cfg.header()
    io.write_tensor(out, st.tensor, meta)
    Ns = cfg.N_sweep or (cfg.N_two_mode,)
    rows = run_pool(lambda N: two_mode_row(st, N), Ns)
    io.write_csv(out / "two_mode.csv", TWO_MODE_COLUMNS, _rows(rows, TWO_MODE_COLUMNS), meta)


def cmd_bogoliubov(cfg, out: Path):
    st = prepare(cfg)
    meta = cfg.header()
    N = cfg.N_two_mode
    rows = run_pool(lambda M: bogoliubov_row(st, M, N, cfg.oracle_nmax), cutoff_sweep(cfg))
    io.write_csv(out / "bogoliubov.csv", BOGOLIUBOV_COLUMNS, _rows(rows, BOGOLIUBOV_COLUMNS), meta)
    extra = ["M", "oracle_converged", "route_difference", "shift_residual", "lambda0_saturated"]
    io.write_csv(out / "bogoliubov_checks.csv", extra, _rows(rows, extra), meta)


def cmd_exact(cfg, out: Path):
    st = prepare(cfg)
    meta = cfg.header()
    ex = exact_ground_state(st, cfg.N, tol=cfg.tol_lanczos, seed=cfg.seed)
    io.write_excitation(out, ex.excitation, meta)
    if cfg.write_matrix:
        io.write_sparse(out / "H_N.csv", ex.H, meta)
    gs = ex.ground
    io.write_json(out / "exact.json", {
        **meta, "N": cfg.N, "M_tot": cfg.M_tot, "dimension": ex.basis.dimension,
        "E_exact": ex.energy, "E_2mode": ex.E_2mode, "E_bog": ex.E_bog,
        "residual_vs_2mode_plus_bog": ex.energy - (ex.E_2mode + ex.E_bog),
        "lanczos_residual": gs.residual, "second_ritz": gs.second, "degenerate": gs.degenerate,
        "N1": ex.N1, "N2": ex.N2,
    })


def cmd_sweep(cfg, out: Path):
    rows = run_sweep(cfg)
    io.write_csv(out / "sweep.csv", SWEEP_COLUMNS, _rows(rows, SWEEP_COLUMNS), cfg.header())


def cmd_verify(cfg, out: Path) -> int:
    report = build_report(cfg)
    io.write_json(out / "report.json", report)
    for r in report["records"]:
        print(f"{'PASS' if r['pass'] else 'FAIL'} {r['name']}")
    return 0 if report["all_pass"] else 1


HANDLERS = {
    "hartree": cmd_hartree,
    "two-mode": cmd_two_mode,
    "bogoliubov": cmd_bogoliubov,
    "exact": cmd_exact,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] not in HANDLERS:
        sys.stderr.write(USAGE)
        if argv and not argv[0].startswith("-"):
            sys.stderr.write(f"unknown command {argv[0]!r}\n")
        return 2
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 2)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        sys.stderr.write(str(exc) + "\n")
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        status = HANDLERS[args.command](cfg, out)
    except (ConvergenceError, LanczosError, SizingError, ValueError) as exc:
        sys.stderr.write(f"squeezewell {args.command} failed (config {cfg.hash}): {exc}\n")
        return 3
    return int(status or 0)


if __name__ == "__main__":
    sys.exit(main())
