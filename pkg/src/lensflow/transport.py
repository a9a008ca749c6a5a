"""Explicit transport of the non-wetting saturation.

Upwind fluxes from the pressure step drive a forward update with an
adaptive step: a flux CFL bound on every cell's mobile pore volume, a
capillary-diffusion bound on the explicit pc term, a growth cap, and
truncation to the next schedule or report event.
"""

from dataclasses import dataclass

import numpy as np

from . import _core as kernels

DT_INITIAL = 1.0e-7  # s
DT_MIN = 1.0e-9  # s
DT_GROWTH = 1.25
DT_MAX_DEFAULT = 86400.0  # s
# stability factor for the explicit capillary-diffusion term; fixed
# rather than tied to the advective cfl, which users tune for wave
# resolution, not diffusion stability. The per-cell face-sum bound is
# Gershgorin-tight at 1.0.
CAP_STABILITY = 0.8


class TimestepUnderflowError(RuntimeError):
    """Stable step fell below DT_MIN: runaway fluxes."""


@dataclass
class ClampLedger:
    """Pore volume (m^3) created/destroyed by saturation clamping."""

    overfill: float = 0.0
    undershoot: float = 0.0

    @property
    def net(self):
        return self.overfill - self.undershoot


@dataclass(frozen=True)
class InjectionInterval:
    """One active span of the injection schedule, [start, stop) in s."""

    start: float
    stop: float
    mass_rate: float  # kg/s

    def __post_init__(self):
        if self.stop <= self.start:
            raise ValueError("injection interval must have stop > start")
        if self.mass_rate < 0.0:
            raise ValueError("injection mass rate must be >= 0")


def validate_schedule(intervals):
    """Reject overlapping intervals; returns them sorted by start."""
    ordered = sorted(intervals, key=lambda iv: iv.start)
    for a, b in zip(ordered, ordered[1:]):
        if b.start < a.stop:
            raise ValueError(
                f"injection intervals overlap: [{a.start}, {a.stop}) and "
                f"[{b.start}, {b.stop})"
            )
    return ordered


def injection_rate(intervals, t, rho_n):
    """Volumetric source rate (m^3/s) at time t."""
    mass = sum(iv.mass_rate for iv in intervals if iv.start <= t < iv.stop)
    return mass / rho_n


def schedule_events(intervals, end_time):
    """Times where the source turns on or off, plus the end time."""
    times = {end_time}
    for iv in intervals:
        times.add(iv.start)
        times.add(iv.stop)
    return sorted(t for t in times if 0.0 < t <= end_time)


def inlet_cells(grid, patch):
    """Flat ids of top-layer cells whose centers lie in the patch.

    `patch` gives closed (lo, hi) bounds for every non-gravity axis; a
    1D column takes an empty patch and injects in its top cell.
    """
    if len(patch) != grid.ndim - 1:
        raise ValueError(
            f"inlet patch needs bounds for {grid.ndim - 1} axes, "
            f"got {len(patch)}"
        )
    mask = np.ones(grid.dims[:-1], dtype=bool)
    for a, (lo, hi) in enumerate(patch):
        centers = grid.axis_centers(a)
        inside = (centers >= lo) & (centers <= hi)
        shape = [1] * (grid.ndim - 1)
        shape[a] = grid.dims[a]
        mask &= inside.reshape(shape)
    full = np.zeros(grid.dims, dtype=bool)
    full[..., grid.dims[-1] - 1] = mask
    cells = np.flatnonzero(full.ravel())
    if cells.size == 0:
        raise ValueError("inlet patch covers no cells")
    return cells


def distribute_source(rate_vol, cells, ncells):
    """Spread a volumetric rate uniformly over the inlet cells."""
    q = np.zeros(ncells)
    if rate_vol != 0.0:
        q[cells] = rate_vol / cells.size
    return q


def flux_bound(f_n, bnd_n, bnd_cells, faces, pore_volume, mobile, q_n):
    """Donor-cell step limit before the cfl factor.

    Mobile pore volume over the larger of total outflow and total
    inflow plus source, per cell.
    """
    ncells = pore_volume.size
    outflow, inflow = kernels.flow_sums(f_n, faces.left, faces.right, ncells)
    if bnd_cells.size:
        np.add.at(outflow, bnd_cells, np.maximum(bnd_n, 0.0))
        np.add.at(inflow, bnd_cells, np.maximum(-bnd_n, 0.0))
    denom = np.maximum(outflow, inflow + np.maximum(q_n, 0.0))
    budget = pore_volume * mobile
    with np.errstate(divide="ignore"):
        return float(np.min(np.where(denom > 0.0, budget / denom, np.inf)))


def capillary_bound(mob_n, dpc_abs, faces, pore_volume):
    """Explicit-diffusion step limit before the stability factor."""
    cap = kernels.capillary_sums(mob_n, faces.trans, dpc_abs, faces.left,
                                 faces.right, pore_volume.size)
    with np.errstate(divide="ignore"):
        return float(np.min(np.where(cap > 0.0, pore_volume / cap, np.inf)))


def limit_capillary_flux(f_cap, dpc_faces, denom, dt):
    """Cap each face's pc-driven flux for explicit stability at any dt.

    `dpc_faces` is the pc difference driving the flux and `denom` the
    linearized pc response to moving volume across the face, typically
    |dpc/dS|_L / (theta V)_L + |dpc/dS|_R / (theta V)_R (one-sided for
    boundary faces against a fixed-pc bath). The cap is CAP_RELAX times
    the transfer rate that would equalize the two pc values over `dt`,
    so stiff faces (pools near capillary-gravity equilibrium, where
    dpc/dS grows without bound) relax by a fixed fraction per step
    instead of imposing an ever-shrinking global diffusion limit. Loose
    faces pass untouched. Faces with no pc feedback (denom == 0) are
    unlimited; their flux cannot self-amplify.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        lim = np.where(denom > 0.0,
                       CAP_RELAX * np.abs(dpc_faces) / (denom * dt), np.inf)
    return np.clip(f_cap, -lim, lim)


def stable_timestep(f_n, bnd_n, bnd_cells, mob_n, dpc_abs, faces,
                    pore_volume, mobile, q_n, cfl, dt_prev,
                    dt_initial=DT_INITIAL, max_dt=DT_MAX_DEFAULT,
                    until=np.inf):
    """Largest stable step for the explicit saturation update.

    Flux bound: cfl * theta*V*mobile_range / max(outflow, inflow+source)
    per cell. Capillary bound: CAP_STABILITY * theta*V /
    sum(T*mob_n*|dpc/dS|) per cell. First step is dt_initial; later
    steps grow at most 1.25x. The result is truncated to `until` (time
    left to the next event) after the underflow check, so landing on a
    report time is never mistaken for a runaway.
    """
    dt_flux = flux_bound(f_n, bnd_n, bnd_cells, faces, pore_volume, mobile,
                         q_n)
    dt_cap = capillary_bound(mob_n, dpc_abs, faces, pore_volume)
    dt = min(cfl * dt_flux, CAP_STABILITY * dt_cap)
    if dt_prev is None:
        dt = min(dt, dt_initial)
    else:
        dt = min(dt, DT_GROWTH * dt_prev)
    dt = min(dt, max_dt)
    if dt < DT_MIN:
        raise TimestepUnderflowError(
            f"stable step {dt:.3e} s fell below {DT_MIN:.0e} s; "
            f"flux bound {cfl * dt_flux:.3e} s, capillary bound "
            f"{CAP_STABILITY * dt_cap:.3e} s"
        )
    return min(dt, until)


def advance_saturation(s_n, f_n, bnd_n, bnd_cells, faces, q_n, dt,
                       pore_volume, s_max, ledger):
    """Forward update of s_n; clamps to [0, 1 - s_wr] with a ledger.

    `q_n` is the total non-wetting volumetric source per cell (m^3/s);
    boundary fluxes are positive outward.
    """
    div = kernels.divergence(f_n, faces.left, faces.right, s_n.size)
    if bnd_cells.size:
        np.add.at(div, bnd_cells, -bnd_n)
    new = s_n + dt * (div + q_n) / pore_volume
    over = new - s_max
    ledger.overfill += float(np.sum(pore_volume[over > 0.0] * over[over > 0.0]))
    under = -new
    ledger.undershoot += float(
        np.sum(pore_volume[under > 0.0] * under[under > 0.0])
    )
    return np.clip(new, 0.0, s_max)
