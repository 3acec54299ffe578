"""Deterministic CSV/JSON writers (17 significant digits everywhere)."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

SCHEMA = 1


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(x)


def write_csv(path, columns, rows, meta: dict | None = None):
    """Comment header with schema and metadata, then a column line, then rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# schema={SCHEMA}"]
    for k in sorted(meta or {}):
        if k == "schema":
            continue
        lines.append(f"# {k}={fmt(meta[k])}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path):
    """Inverse of :func:`write_csv`: (meta, columns, rows as float arrays)."""
    meta, columns, rows = {}, None, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            meta[k] = v
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append(line.split(","))
    return meta, columns, rows


def _json(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json(str(k), indent, level + 1)}: {_json(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        return "[\n" + ",\n".join(pad + _json(v, indent, level + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return '"' + fmt(v) + '"'
        return format(v, ".17g")
    s = str(obj)
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dumps_json(obj, indent: int = 2) -> str:
    """JSON with sorted keys and every float at 17 significant digits."""
    return _json(obj, indent, 0) + "\n"


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_json(obj), encoding="utf-8")


def write_grid_vector(path, grid, values, meta=None):
    write_csv(path, ["x", "value"], zip(grid.nodes, values), meta)


def write_spectrum(directory, spectrum, meta=None):
    directory = Path(directory)
    rows = [(i + 1, mu, par) for i, (mu, par) in enumerate(zip(spectrum.eigenvalues, spectrum.parity))]
    write_csv(directory / "spectrum.csv", ["index", "eigenvalue", "parity"], rows, meta)
    for i, u in enumerate(spectrum.eigenvectors):
        write_grid_vector(directory / f"eigenvector_{i + 1:02d}.csv", spectrum.grid, u, meta)


def write_tensor(directory, tensor, meta=None):
    directory = Path(directory)
    M = tensor.size
    rows = [(m + 1, n + 1, p + 1, q + 1, tensor.w[m, n, p, q])
            for m in range(M) for n in range(M) for p in range(M) for q in range(M)]
    write_csv(directory / f"tensor_w_{tensor.basis}.csv", ["m", "n", "p", "q", "value"], rows, meta)
    hrows = [(m + 1, n + 1, tensor.h[m, n]) for m in range(M) for n in range(M)]
    write_csv(directory / f"tensor_h_{tensor.basis}.csv", ["m", "n", "value"], hrows, meta)
    header = dict(tensor.header())
    header.update(meta or {})
    header["schema"] = SCHEMA
    write_json(directory / f"tensor_{tensor.basis}.json", header)


def write_sparse(path, matrix, meta=None):
    A = matrix.tocsr()
    A.sum_duplicates()
    A.sort_indices()
    C = A.tocoo()
    write_csv(path, ["row", "col", "value"], zip(C.row, C.col, C.data), meta)


def write_excitation(directory, rep, meta=None):
    directory = Path(directory)
    norms = rep.norms()
    rows = [(s, d, v) for (s, d), v in sorted(norms.items())]
    write_csv(directory / "excitation_norms.csv", ["s", "d", "norm_sq"], rows, meta)
    blobs = {f"s{s}_d{d}": rep.component(s, d) for (s, d) in sorted(norms)}
    with open(directory / "excitation_components.npz", "wb") as fh:
        np.savez(fh, **blobs)
