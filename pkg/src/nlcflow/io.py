"""
Snapshot files, diagnostics CSV and trajectory directories.

A snapshot holds one field::

    NLCF1\\n
    <kind> <nx> <ny> <hx> <hy> <t> <components>\\n
    <raw little-endian float64, row-major, component-major>

``kind`` is ``rho`` or ``p`` (1 component), ``u`` (2 components: the x-face
array of shape ``(nx + 1, ny)`` followed by the y-face array of shape
``(nx, ny + 1)``) or ``d`` (3 components of shape ``(nx, ny)``). Floats in
the header are written with ``repr`` so they round-trip exactly.

A trajectory directory contains ``config.toml``, ``diagnostics.csv`` and
``snapshots/NNNNNN_<kind>.nlcf`` where ``NNNNNN`` is the step index.
All writes go to a temporary file in the target directory and are renamed
into place.
"""

from __future__ import annotations

import csv
import io as _io
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .config import SolverConfig, dumps_config, load_config
from .diagnostics import CSV_COLUMNS
from .errors import FormatError, IoError
from .fields import FlowState, Grid

MAGIC = b"NLCF1\n"
KINDS = {"rho": 1, "p": 1, "u": 2, "d": 3}
_LE = np.dtype("<f8")


# -- atomic writes ---------------------------------------------------------------


def atomic_write(path, data: bytes):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(data)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


# -- snapshots ---------------------------------------------------------------------


def _field_arrays(state: FlowState, kind):
    if kind == "rho":
        return [state.rho]
    if kind == "p":
        return [state.p]
    if kind == "u":
        return [state.u, state.v]
    if kind == "d":
        return [state.d]
    raise ValueError(f"unknown snapshot kind {kind!r}")


def _expected_shapes(grid: Grid, kind):
    if kind == "u":
        return [grid.xface_shape, grid.yface_shape]
    if kind == "d":
        return [(3,) + grid.cell_shape]
    return [grid.cell_shape]


def encode_snapshot(state: FlowState, kind) -> bytes:
    g = state.grid
    header = f"{kind} {g.nx} {g.ny} {g.hx!r} {g.hy!r} {float(state.t)!r} {KINDS[kind]}\n"
    payload = b"".join(
        np.ascontiguousarray(a, dtype=_LE).tobytes() for a in _field_arrays(state, kind)
    )
    return MAGIC + header.encode("ascii") + payload


def decode_snapshot(data: bytes, source="<bytes>"):
    """Return ``(kind, grid, t, arrays)`` from snapshot bytes."""
    if not data.startswith(MAGIC):
        raise FormatError(f"{source}: bad magic")
    end = data.find(b"\n", len(MAGIC))
    if end < 0:
        raise FormatError(f"{source}: truncated header")
    try:
        kind, nx, ny, hx, hy, t, comps = data[len(MAGIC):end].decode("ascii").split()
        nx, ny, comps = int(nx), int(ny), int(comps)
        hx, hy, t = float(hx), float(hy), float(t)
    except (UnicodeDecodeError, ValueError) as exc:
        raise FormatError(f"{source}: malformed header") from exc
    if kind not in KINDS or KINDS[kind] != comps:
        raise FormatError(f"{source}: unknown kind/components {kind!r}/{comps}")
    try:
        grid = Grid(nx, ny, nx * hx, ny * hy)
    except ValueError as exc:
        raise FormatError(f"{source}: bad grid in header: {exc}") from exc
    shapes = _expected_shapes(grid, kind)
    payload = data[end + 1:]
    want = sum(int(np.prod(s)) for s in shapes) * _LE.itemsize
    if len(payload) != want:
        raise FormatError(
            f"{source}: payload has {len(payload)} bytes, header implies {want}"
        )
    arrays, off = [], 0
    for s in shapes:
        n = int(np.prod(s))
        arrays.append(np.frombuffer(payload, _LE, n, off).reshape(s).astype(np.float64))
        off += n * _LE.itemsize
    return kind, grid, t, arrays


def write_snapshot(state: FlowState, path, kind):
    atomic_write(path, encode_snapshot(state, kind))


def read_snapshot(path):
    """Return ``(kind, grid, t, arrays)``."""
    return decode_snapshot(_read_bytes(path), str(path))


def write_state(state: FlowState, directory, stem):
    """Write all four fields as ``<stem>_<kind>.nlcf``."""
    for kind in KINDS:
        write_snapshot(state, Path(directory) / f"{stem}_{kind}.nlcf", kind)


def read_state(directory, stem) -> FlowState:
    fields = {}
    grid = t = None
    for kind in KINDS:
        k, g, tk, arrays = read_snapshot(Path(directory) / f"{stem}_{kind}.nlcf")
        if grid is None:
            grid, t = g, tk
        elif g != grid or tk != t:
            raise FormatError(f"{directory}/{stem}: snapshots disagree on grid or time")
        fields[k] = arrays
    return FlowState(
        grid,
        fields["rho"][0],
        fields["u"][0],
        fields["u"][1],
        fields["p"][0],
        fields["d"][0],
        t,
    )


# -- CSV -------------------------------------------------------------------------------


def format_value(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def dumps_csv(columns, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([format_value(x) for x in row])
    return buf.getvalue()


def write_csv(path, columns, rows):
    atomic_write(path, dumps_csv(columns, rows).encode("ascii"))


def read_csv(path):
    """Return ``(columns, rows)`` with values parsed as floats (ints where integral text)."""
    text = _read_bytes(path).decode("ascii")
    reader = csv.reader(_io.StringIO(text))
    try:
        columns = next(reader)
    except StopIteration:
        raise FormatError(f"{path}: empty CSV") from None
    rows = []
    for line in reader:
        if len(line) != len(columns):
            raise FormatError(f"{path}: row has {len(line)} fields, expected {len(columns)}")
        try:
            rows.append([int(x) if re.fullmatch(r"-?\d+", x) else float(x) for x in line])
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from exc
    return columns, rows


def write_diagnostics(path, record):
    write_csv(path, CSV_COLUMNS, record.rows())


# -- trajectory directories -----------------------------------------------------------


def step_index(t, dt) -> int:
    return int(round(t / dt))


def write_trajectory(directory, cfg: SolverConfig, states, record=None):
    directory = Path(directory)
    atomic_write(directory / "config.toml", dumps_config(cfg).encode("utf-8"))
    snaps = directory / "snapshots"
    for s in states:
        write_state(s, snaps, f"{step_index(s.t, cfg.dt):06d}")
    if record is not None:
        write_diagnostics(directory / "diagnostics.csv", record)


def list_steps(directory):
    snaps = Path(directory) / "snapshots"
    if not snaps.is_dir():
        raise IoError(f"{directory}: no snapshots directory")
    steps = sorted({int(m.group(1)) for f in snaps.iterdir()
                    if (m := re.fullmatch(r"(\d+)_rho\.nlcf", f.name))})
    if not steps:
        raise IoError(f"{directory}: no snapshots found")
    return steps


def read_trajectory(directory):
    """Return ``(cfg, states)`` with states ordered by step."""
    directory = Path(directory)
    cfg = load_config(directory / "config.toml")
    snaps = directory / "snapshots"
    states = [read_state(snaps, f"{n:06d}") for n in list_steps(directory)]
    return cfg, states
