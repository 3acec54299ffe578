"""Flat key=value run configuration with command-line overrides."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

COMMANDS = ("hartree", "two-mode", "bogoliubov", "exact", "sweep", "verify")

# Reference values; every key a config file may set.
DEFAULTS = {
    "s": "2",
    "L": "8",
    "L_sweep": "6,8,10",
    "X": "",  # empty -> L/2 + margin
    "margin": "7",
    "n": "2001",
    "w0": "1",
    "R": "1",
    "lambda": "0.1",
    "lambda_sweep": "",
    "N": "6",
    "N_two_mode": "1000",
    "N_sweep": "",
    "M_tot": "8",
    "M": "",  # empty -> (M_tot - 2)/2
    "delta": "",
    "tol_hartree": "1e-10",
    "damping": "0.5",
    "max_iter": "500",
    "tol_lanczos": "1e-10",
    "oracle_nmax": "16",
    "convolution": "direct",
    "seed": "20240917",
    "write_matrix": "0",
}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


def parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError([f"line {lineno}: expected key=value, got {raw!r}"])
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError([f"--set expects key=value, got {item!r}"])
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text):
    return [int(t) for t in text.split(",") if t.strip()]


@dataclass(frozen=True)
class RunConfig:
    s: float
    L: float
    L_sweep: tuple
    X: float
    n: int
    w0: float
    R: float
    lam: float
    lambda_sweep: tuple
    N: int
    N_two_mode: int
    N_sweep: tuple
    M_tot: int
    M: int
    delta: float | None
    tol_hartree: float
    damping: float
    max_iter: int
    tol_lanczos: float
    oracle_nmax: int
    convolution: str
    seed: int
    write_matrix: bool
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def with_values(self, **updates) -> "RunConfig":
        raw = dict(self.raw)
        raw.update({k: str(v) for k, v in updates.items()})
        return build_config(raw)

    def header(self) -> dict:
        return {"config_hash": self.hash, "schema": 1}


def config_hash(raw: dict) -> str:
    text = "\n".join(f"{k}={raw[k]}" for k in sorted(raw))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def build_config(values: dict) -> RunConfig:
    """Merge over the defaults, convert, and validate; report every violation at once."""
    raw = dict(DEFAULTS)
    problems = []
    for k, v in values.items():
        if k not in DEFAULTS:
            problems.append(f"unknown key {k!r}")
        else:
            raw[k] = v

    def get(key, conv):
        try:
            return conv(raw[key])
        except (TypeError, ValueError):
            problems.append(f"{key}={raw[key]!r} is not a valid {conv.__name__}")
            return None

    s = get("s", float)
    L = get("L", float)
    L_sweep = get("L_sweep", _floats)
    margin = get("margin", float)
    n = get("n", int)
    w0 = get("w0", float)
    R = get("R", float)
    lam = get("lambda", float)
    lambda_sweep = get("lambda_sweep", _floats)
    N = get("N", int)
    N_two = get("N_two_mode", int)
    N_sweep = get("N_sweep", _ints)
    M_tot = get("M_tot", int)
    tol_h = get("tol_hartree", float)
    damping = get("damping", float)
    max_iter = get("max_iter", int)
    tol_l = get("tol_lanczos", float)
    oracle_nmax = get("oracle_nmax", int)
    seed = get("seed", int)
    write_matrix = get("write_matrix", int)
    X = get("X", float) if raw["X"] else (L / 2 + margin if L is not None and margin is not None else None)
    M = get("M", int) if raw["M"] else ((M_tot - 2) // 2 if M_tot is not None else None)
    delta = get("delta", float) if raw["delta"] else None

    def need(cond, msg):
        if not cond:
            problems.append(msg)

    if s is not None:
        need(s >= 2 and float(s).is_integer() and int(s) % 2 == 0, f"s={raw['s']} must be an even integer >= 2")
    if L is not None:
        need(L > 0, f"L={raw['L']} must be positive")
    for v in L_sweep or ():
        need(v > 0, f"L_sweep entry {v} must be positive")
    if X is not None and L is not None:
        need(X > L / 2, f"X={X} must exceed L/2={L / 2}")
    if n is not None:
        need(n >= 5 and n % 2 == 1, f"n={raw['n']} must be an odd integer >= 5")
    if w0 is not None:
        need(w0 > 0, f"w0={raw['w0']} must be positive")
    if R is not None:
        need(R > 0, f"R={raw['R']} must be positive")
    if lam is not None:
        need(lam >= 0, f"lambda={raw['lambda']} must be nonnegative")
    for v in lambda_sweep or ():
        need(v >= 0, f"lambda_sweep entry {v} must be nonnegative")
    if N is not None:
        need(N >= 2, f"N={raw['N']} must be >= 2")
    if N_two is not None:
        need(N_two >= 2, f"N_two_mode={raw['N_two_mode']} must be >= 2")
    for v in N_sweep or ():
        need(v >= 2, f"N_sweep entry {v} must be >= 2")
    if M_tot is not None:
        need(M_tot >= 4 and M_tot % 2 == 0, f"M_tot={raw['M_tot']} must be an even integer >= 4")
        if M is not None:
            need(1 <= M <= (M_tot - 2) // 2, f"M={M} must lie in 1..{(M_tot - 2) // 2}")
    if delta is not None:
        need(delta > 0, f"delta={raw['delta']} must be positive")
    for key, val in (("tol_hartree", tol_h), ("tol_lanczos", tol_l)):
        if val is not None:
            need(val > 0, f"{key}={raw[key]} must be positive")
    if damping is not None:
        need(0 < damping <= 1, f"damping={raw['damping']} must lie in (0, 1]")
    if max_iter is not None:
        need(max_iter >= 1, f"max_iter={raw['max_iter']} must be >= 1")
    if oracle_nmax is not None:
        need(oracle_nmax >= 4, f"oracle_nmax={raw['oracle_nmax']} must be >= 4")
    need(raw["convolution"] in ("direct", "fft"), f"convolution={raw['convolution']!r} must be direct or fft")
    if write_matrix is not None:
        need(write_matrix in (0, 1), "write_matrix must be 0 or 1")

    if problems:
        raise ConfigError(problems)
    return RunConfig(
        s=s, L=L, L_sweep=tuple(L_sweep), X=X, n=n, w0=w0, R=R, lam=lam,
        lambda_sweep=tuple(lambda_sweep), N=N, N_two_mode=N_two, N_sweep=tuple(N_sweep),
        M_tot=M_tot, M=M, delta=delta, tol_hartree=tol_h, damping=damping, max_iter=max_iter,
        tol_lanczos=tol_l, oracle_nmax=oracle_nmax, convolution=raw["convolution"], seed=seed,
        write_matrix=bool(write_matrix), raw=raw,
    )


def load_config(path=None, overrides=None) -> RunConfig:
    values = parse_text(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update(parse_overrides(overrides))
    return build_config(values)


def reference_config() -> RunConfig:
    return build_config({})
