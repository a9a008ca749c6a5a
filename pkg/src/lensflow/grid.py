"""Structured Cartesian grid, material painting, and face transmissibilities.

Cells are indexed in C order over ``dims``. The last axis is vertical and
points upward; gravity acts in its negative direction. Axes absent from a
1D/2D grid contribute unit thickness to volumes and face areas.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    dims: tuple  # cells per axis (1 to 3 axes)
    spacing: tuple  # m per axis
    origin: tuple = None

    def __post_init__(self):
        if not 1 <= len(self.dims) <= 3:
            raise ValueError("grid must have 1 to 3 axes")
        if len(self.spacing) != len(self.dims):
            raise ValueError("spacing and dims must have the same length")
        if any(int(n) != n or n < 1 for n in self.dims):
            raise ValueError("all dims must be integers >= 1")
        if any(h <= 0.0 for h in self.spacing):
            raise ValueError("all spacings must be positive")
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * len(self.dims))
        elif len(self.origin) != len(self.dims):
            raise ValueError("origin and dims must have the same length")
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def ncells(self):
        return int(np.prod(self.dims))

    @property
    def cell_volume(self):
        """Volume of one cell (m^3), unit thickness on absent axes."""
        return float(np.prod(self.spacing))

    @property
    def gravity_axis(self):
        return self.ndim - 1

    @property
    def top(self):
        """Coordinate of the domain top along the gravity axis."""
        a = self.gravity_axis
        return self.origin[a] + self.dims[a] * self.spacing[a]

    def extent(self, axis):
        return self.dims[axis] * self.spacing[axis]

    def face_area(self, axis):
        """Area of a face normal to `axis` (m^2), unit thickness on absent axes."""
        return float(np.prod([h for a, h in enumerate(self.spacing) if a != axis]))

    def axis_centers(self, axis):
        n, h, x0 = self.dims[axis], self.spacing[axis], self.origin[axis]
        return x0 + (np.arange(n) + 0.5) * h

    def cell_coordinate(self, axis):
        """Center coordinate along `axis` for every cell, flat C order."""
        shape = [1] * self.ndim
        shape[axis] = self.dims[axis]
        coord = self.axis_centers(axis).reshape(shape)
        return np.broadcast_to(coord, self.dims).ravel().copy()

    def cell_depth(self):
        """Depth of cell centers below the domain top (m), flat C order."""
        return self.top - self.cell_coordinate(self.gravity_axis)


def build_grid(extents, resolution):
    """Grid covering `extents` (m per axis) at `resolution` cells per axis."""
    if len(extents) != len(resolution):
        raise ValueError("extents and resolution must have the same length")
    if any(e <= 0.0 for e in extents):
        raise ValueError("extents must be positive")
    if any(int(n) != n or n < 1 for n in resolution):
        raise ValueError("resolution must be integers >= 1")
    spacing = tuple(float(e) / int(n) for e, n in zip(extents, resolution))
    return Grid(dims=tuple(int(n) for n in resolution), spacing=spacing)


@dataclass(frozen=True)
class BoxRegion:
    """Axis-aligned box painting one material; extents in m per axis."""

    material: int
    box: tuple  # ((lo, hi), ...) per axis

    def __post_init__(self):
        for lo, hi in self.box:
            if hi < lo:
                raise ValueError("box extents must satisfy lo <= hi")


@dataclass(frozen=True)
class MaterialMap:
    grid: Grid
    ids: np.ndarray  # int32, shape = grid.dims

    @property
    def flat(self):
        return self.ids.ravel()


def assign_materials(grid, materials, background, regions):
    """Paint material ids onto the grid: background, then boxes in order.

    A cell belongs to a box iff its center lies inside (closed bounds);
    later regions override earlier ones.
    """
    nmat = len(materials)
    if not 0 <= background < nmat:
        raise ValueError(f"unknown background material id {background}")
    ids = np.full(grid.dims, background, dtype=np.int32)
    centers = [grid.axis_centers(a) for a in range(grid.ndim)]
    for region in regions:
        if not 0 <= region.material < nmat:
            raise ValueError(f"unknown material id {region.material} in region")
        if len(region.box) != grid.ndim:
            raise ValueError("region box must give extents for every grid axis")
        mask = np.ones(grid.dims, dtype=bool)
        for a, (lo, hi) in enumerate(region.box):
            inside = (centers[a] >= lo) & (centers[a] <= hi)
            shape = [1] * grid.ndim
            shape[a] = grid.dims[a]
            mask &= inside.reshape(shape)
        ids[mask] = region.material
    return MaterialMap(grid=grid, ids=ids)


@dataclass(frozen=True)
class FaceTable:
    """Interior faces, all axes concatenated; orientation low index -> high."""

    left: np.ndarray  # flat cell id on the low side
    right: np.ndarray  # flat cell id on the high side
    trans: np.ndarray  # geometric transmissibility A*harm(k)/d (m^3)
    dz: np.ndarray  # z_right - z_left (m); zero off the gravity axis
    axis: np.ndarray  # int8 axis of each face
    mat_left: np.ndarray  # material ids either side
    mat_right: np.ndarray
    heterogeneous: np.ndarray  # bool

    @property
    def nfaces(self):
        return self.left.size


def face_transmissibilities(grid, material_map, materials):
    """Two-point transmissibilities for all interior faces.

    T = A * harm(k_left, k_right) / d with d the center distance; equal
    permeabilities short-circuit the harmonic mean so homogeneous faces
    come out exactly A*k/d.
    """
    perm = np.array([m.permeability for m in materials])
    k_cell = perm[material_map.flat]
    ids_flat = material_map.flat
    cell_index = np.arange(grid.ncells).reshape(grid.dims)

    left, right, trans, dz, axes = [], [], [], [], []
    for a in range(grid.ndim):
        if grid.dims[a] < 2:
            continue
        lo = [slice(None)] * grid.ndim
        hi = [slice(None)] * grid.ndim
        lo[a] = slice(None, -1)
        hi[a] = slice(1, None)
        li = cell_index[tuple(lo)].ravel()
        ri = cell_index[tuple(hi)].ravel()
        kl, kr = k_cell[li], k_cell[ri]
        harm = np.where(kl == kr, kl, 2.0 * kl * kr / (kl + kr))
        t = grid.face_area(a) * harm / grid.spacing[a]
        left.append(li)
        right.append(ri)
        trans.append(t)
        step = grid.spacing[a] if a == grid.gravity_axis else 0.0
        dz.append(np.full(li.size, step))
        axes.append(np.full(li.size, a, dtype=np.int8))

    if left:
        left = np.concatenate(left)
        right = np.concatenate(right)
        trans = np.concatenate(trans)
        dz = np.concatenate(dz)
        axes = np.concatenate(axes)
    else:  # single-cell grid
        left = np.empty(0, dtype=np.int64)
        right = np.empty(0, dtype=np.int64)
        trans = np.empty(0)
        dz = np.empty(0)
        axes = np.empty(0, dtype=np.int8)

    ml = ids_flat[left]
    mr = ids_flat[right]
    return FaceTable(
        left=left.astype(np.int64),
        right=right.astype(np.int64),
        trans=trans,
        dz=dz,
        axis=axes,
        mat_left=ml,
        mat_right=mr,
        heterogeneous=ml != mr,
    )


def boundary_cell_indices(grid, axis, end):
    """Flat ids of the cells touching one side of the domain.

    `end` = 0 for the low side, 1 for the high side along `axis`.
    """
    sel = [slice(None)] * grid.ndim
    sel[axis] = -1 if end else 0
    return np.arange(grid.ncells).reshape(grid.dims)[tuple(sel)].ravel()
