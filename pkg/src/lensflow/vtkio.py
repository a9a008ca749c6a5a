"""Legacy VTK structured-points snapshots: writer, reader, point probe.

Simulation axes map in order to VTK x, y, z; axes a 1D/2D grid lacks are
padded at the end with one cell of unit thickness. Cell arrays are
written x-fastest (Fortran ravel of the C-ordered field). Binary mode
stores big-endian doubles/ints as the legacy format requires, so files
round-trip bitwise.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

_VERSION_LINE = "# vtk DataFile Version 3.0"
_DTYPES = {"double": ">f8", "int": ">i4"}


def _padded_geometry(grid):
    dims = grid.dims + (1,) * (3 - grid.ndim)
    spacing = grid.spacing + (1.0,) * (3 - grid.ndim)
    origin = grid.origin + (0.0,) * (3 - grid.ndim)
    return dims, spacing, origin


def _fortran_ravel(values, dims):
    return np.asarray(values).reshape(dims, order="C").ravel(order="F")


def write_snapshot(path, grid, s_n, p_w, material, time=None, binary=True):
    """Write one snapshot with cell arrays s_n, p_w and material id."""
    dims, spacing, origin = _padded_geometry(grid)
    point_dims = tuple(n + 1 for n in dims)
    title = "lensflow snapshot" if time is None else \
        f"lensflow snapshot t_s={time!r}"
    arrays = [
        ("s_n", "double", _fortran_ravel(s_n, grid.dims).astype(">f8")),
        ("p_w", "double", _fortran_ravel(p_w, grid.dims).astype(">f8")),
        ("material", "int", _fortran_ravel(material, grid.dims).astype(">i4")),
    ]
    with open(path, "wb") as f:
        def line(text):
            f.write(text.encode("ascii") + b"\n")

        line(_VERSION_LINE)
        line(title)
        line("BINARY" if binary else "ASCII")
        line("DATASET STRUCTURED_POINTS")
        line("DIMENSIONS {} {} {}".format(*point_dims))
        line("ORIGIN {!r} {!r} {!r}".format(*origin))
        line("SPACING {!r} {!r} {!r}".format(*spacing))
        line(f"CELL_DATA {grid.ncells}")
        for name, kind, values in arrays:
            line(f"SCALARS {name} {kind}")
            line("LOOKUP_TABLE default")
            if binary:
                f.write(values.tobytes())
                f.write(b"\n")
            else:
                if kind == "int":
                    f.write("\n".join(str(int(v)) for v in values)
                            .encode("ascii"))
                else:
                    f.write("\n".join(repr(float(v)) for v in values)
                            .encode("ascii"))
                f.write(b"\n")


@dataclass(frozen=True)
class Snapshot:
    """One structured-points file: padded 3D cell geometry plus fields."""

    dims: tuple  # cells per VTK axis, always length 3
    origin: tuple
    spacing: tuple
    fields: dict  # name -> flat array, x varying fastest

    def cell_index(self, point):
        idx = []
        for x, x0, h, n in zip(point, self.origin, self.spacing, self.dims):
            i = int(np.floor((x - x0) / h))
            if not 0 <= i < n:
                raise ValueError(f"point {tuple(point)} lies outside the "
                                 f"snapshot domain")
            idx.append(i)
        return tuple(idx)

    def value_at(self, name, point):
        """Field value in the cell containing `point` (3 coordinates)."""
        i, j, k = self.cell_index(point)
        nx, ny = self.dims[0], self.dims[1]
        return self.fields[name][i + nx * (j + ny * k)]


class _Cursor:
    """Byte-level reader that can alternate lines and raw payloads."""

    def __init__(self, data, path):
        self.data = data
        self.pos = 0
        self.path = path

    def fail(self, message):
        raise ValueError(f"{self.path}: {message}")

    def line(self):
        end = self.data.find(b"\n", self.pos)
        if end < 0:
            self.fail("truncated file")
        out = self.data[self.pos:end].decode("ascii", "replace").strip()
        self.pos = end + 1
        return out

    def raw(self, nbytes):
        chunk = self.data[self.pos:self.pos + nbytes]
        if len(chunk) < nbytes:
            self.fail("truncated binary payload")
        self.pos += nbytes
        return chunk

    def ascii_values(self, count, dtype):
        taken = []
        while len(taken) < count:
            taken.extend(self.line().split())
        if len(taken) > count:
            self.fail("excess values in scalar block")
        kind = float if dtype == ">f8" else int
        return np.array([kind(t) for t in taken], dtype=dtype)

    @property
    def exhausted(self):
        return self.data.find(b"SCALARS", self.pos) < 0


def read_snapshot(path):
    data = Path(path).read_bytes()
    cur = _Cursor(data, path)
    if cur.line() != _VERSION_LINE:
        cur.fail("not a legacy VTK file")
    cur.line()  # title, free text
    mode = cur.line()
    if mode not in ("BINARY", "ASCII"):
        cur.fail(f"unsupported data mode {mode!r}")
    if cur.line() != "DATASET STRUCTURED_POINTS":
        cur.fail("not a structured-points dataset")

    header = {}
    for key in ("DIMENSIONS", "ORIGIN", "SPACING", "CELL_DATA"):
        tokens = cur.line().split()
        if tokens[0] != key:
            cur.fail(f"expected {key}, found {tokens[0]!r}")
        header[key] = tokens[1:]
    dims = tuple(int(n) - 1 for n in header["DIMENSIONS"])
    ncells = int(header["CELL_DATA"][0])
    if ncells != int(np.prod(dims)):
        cur.fail(f"CELL_DATA {ncells} does not match cell dims {dims}")

    fields = {}
    while not cur.exhausted:
        tokens = cur.line().split()
        if not tokens:
            continue
        if tokens[0] != "SCALARS" or len(tokens) < 3:
            cur.fail(f"expected a SCALARS declaration, found {tokens!r}")
        name, kind = tokens[1], tokens[2]
        if kind not in _DTYPES:
            cur.fail(f"unsupported scalar type {kind!r}")
        if cur.line() != "LOOKUP_TABLE default":
            cur.fail(f"scalar {name!r} lacks its lookup-table line")
        dtype = _DTYPES[kind]
        if mode == "BINARY":
            values = np.frombuffer(
                cur.raw(ncells * np.dtype(dtype).itemsize), dtype=dtype)
        else:
            values = cur.ascii_values(ncells, dtype)
        fields[name] = values.astype(dtype[1:])  # native order copy
    if not fields:
        cur.fail("no cell arrays present")
    return Snapshot(
        dims=dims,
        origin=tuple(float(v) for v in header["ORIGIN"]),
        spacing=tuple(float(v) for v in header["SPACING"]),
        fields=fields,
    )
