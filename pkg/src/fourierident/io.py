"""Trajectory files.

Two formats are supported:

* ``csv``: ``# key = value`` header lines carrying ``nx, nt, dx, dt, x0, t0``
  followed by ``nx`` comma-separated rows of ``nt`` values (row = spatial index).
* ``binary``: magic ``b"FIDT"``, little-endian u32 version, u64 ``nx``, u64 ``nt``,
  four float64 (``dx, dt, x0, t0``), then the row-major float64 payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ParseError
from .grid import Grid, Trajectory

MAGIC = b"FIDT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQdddd")
_META_KEYS = ("nx", "nt", "dx", "dt", "x0", "t0")


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".csv", ".txt"):
        return "csv"
    if suffix in (".fidt", ".bin"):
        return "binary"
    raise ParseError(f"cannot infer trajectory format from suffix {suffix!r}; pass format=")


def save_trajectory(traj: Trajectory, path, format: str | None = None) -> None:
    format = format or infer_format(path)
    g = traj.grid
    if format == "binary":
        header = _HEADER.pack(MAGIC, VERSION, g.n_x, g.n_t, g.dx, g.dt, g.x0, g.t0)
        payload = np.ascontiguousarray(traj.values, dtype="<f8").tobytes()
        Path(path).write_bytes(header + payload)
    elif format == "csv":
        meta = dict(nx=g.n_x, nt=g.n_t, dx=g.dx, dt=g.dt, x0=g.x0, t0=g.t0)
        lines = [f"# {k} = {meta[k]!r}" for k in _META_KEYS]
        lines += [",".join(repr(float(v)) for v in row) for row in traj.values]
        Path(path).write_text("\n".join(lines) + "\n")
    else:
        raise ParseError(f"unknown trajectory format {format!r}")


def load_trajectory(path, format: str | None = None) -> Trajectory:
    format = format or infer_format(path)
    loaders = {"binary": _load_binary, "csv": _load_csv}
    if format not in loaders:
        raise ParseError(f"unknown trajectory format {format!r}")
    try:
        return loaders[format](Path(path))
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _make(grid_kwargs, values, path) -> Trajectory:
    try:
        grid = Grid(**grid_kwargs)
        return Trajectory(grid, values)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _load_binary(path: Path) -> Trajectory:
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ParseError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, nx, nt, dx, dt, x0, t0 = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ParseError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    payload = raw[_HEADER.size :]
    if len(payload) != 8 * nx * nt:
        raise ParseError(
            f"{path}: shape mismatch, header says {nx}x{nt} "
            f"but payload holds {len(payload) // 8} values"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(nx, nt)
    return _make(dict(n_x=nx, n_t=nt, dx=dx, dt=dt, x0=x0, t0=t0), values, path)


def _load_csv(path: Path) -> Trajectory:
    meta = {}
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = (value.strip(), lineno)
            continue
        rows.append((lineno, line))

    missing = [k for k in _META_KEYS if k not in meta]
    if missing:
        raise ParseError(f"{path}: missing metadata keys {missing}")
    try:
        nx = int(meta["nx"][0])
        nt = int(meta["nt"][0])
        floats = {k: float(meta[k][0]) for k in ("dx", "dt", "x0", "t0")}
    except ValueError as exc:
        raise ParseError(f"{path}: malformed metadata: {exc}") from exc

    if len(rows) != nx:
        raise ParseError(f"{path}: shape mismatch, header nx={nx} but {len(rows)} data rows")
    values = np.empty((nx, nt))
    for i, (lineno, line) in enumerate(rows):
        cells = line.split(",")
        if len(cells) != nt:
            raise ParseError(
                f"{path}: row {i} (line {lineno}) has {len(cells)} columns, expected {nt}"
            )
        try:
            values[i] = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(f"{path}: row {i} (line {lineno}): {exc}") from exc
        if not np.all(np.isfinite(values[i])):
            raise ParseError(f"{path}: row {i} (line {lineno}) contains NaN or Inf")
    return _make(dict(n_x=nx, n_t=nt, **floats), values, path)
