"""The IMPES time loop: pressure solve, flux freeze, saturation advance.

One step solves the wetting pressure implicitly (or reuses the frozen
solution for up to `pressure_solve_every` substeps), freezes the face
fluxes, picks a stable explicit step, and advances the non-wetting
saturation. Steps land exactly on schedule boundaries, report times,
and the end time by construction, so sampled series need no
interpolation and the source rate is constant within every step.

Transport runs in total-velocity fractional-flow form: the pressure
solve fixes the face total velocity, and the non-wetting flux is
rebuilt every step as F_n = f_n vT + T lam (dpc - drho g dz) from the
current saturation field. The capillary and buoyancy rearrangement
terms carry the harmonic mobility lam = mob_n mob_w / mob_t, which
vanishes wherever either phase stops moving, so DNAPL pools (immobile
water) stay numerically mild instead of pinning the explicit step.
"""

import bisect
import time as _time
from dataclasses import dataclass

import numpy as np

from .analysis import (MassPartition, PlumeMetrics, mass_balance_error,
                       partition_masses, plume_metrics, total_mass)
from .fields import CellParams, evaluate_fields
from .grid import assign_materials, face_transmissibilities
from .interface import face_thresholds
from .pressure import (FactorCache, assemble_pressure_system, empty_boundary,
                       face_upwind_mobilities, fractional_nonwetting_flux,
                       hydrostatic_boundary, phase_darcy_flux, solve_pressure)
from .transport import (ClampLedger, advance_saturation, distribute_source,
                        injection_rate, inlet_cells, schedule_events,
                        stable_timestep)


class SimulationError(RuntimeError):
    """A solver or timestep failure, annotated with time and step."""


@dataclass(frozen=True)
class SimulationState:
    time: float
    p_w: np.ndarray
    s_n: np.ndarray


@dataclass(frozen=True)
class ReportRow:
    """One sampled report time: mass partition, geometry, closure."""

    partition: MassPartition
    plume: PlumeMetrics
    outflow: float  # cumulative boundary DNAPL outflow (kg)
    clamp: float  # cumulative net clamped mass (kg)
    error: float  # relative mass-balance closure

    @property
    def time(self):
        return self.partition.time


@dataclass
class SimulationResult:
    final: SimulationState
    snapshots: list
    series: list  # ReportRow per report time
    steps: int
    pressure_solves: int
    clamp_net_kg: float
    wall_seconds: float


class Simulator:
    """Owns the discrete problem and the marching state for one run."""

    def __init__(self, scenario):
        sc = scenario
        self.scenario = sc
        self.grid = sc.grid
        self.mmap = assign_materials(sc.grid, sc.materials, sc.background,
                                     sc.regions)
        self.faces = face_transmissibilities(sc.grid, self.mmap, sc.materials)
        self.sstar_lr, self.sstar_rl, _ = face_thresholds(self.faces,
                                                          sc.materials)
        self.params = CellParams.from_map(self.mmap, sc.materials)
        self.pore_volume = self.params.porosity * sc.grid.cell_volume
        self._inv_pv = 1.0 / self.pore_volume
        self.rho_w_g = sc.wetting.density * sc.gravity
        self.rho_n_g = sc.nonwetting.density * sc.gravity
        self.inv_mu_w = 1.0 / sc.wetting.viscosity
        self.inv_mu_n = 1.0 / sc.nonwetting.viscosity
        if sc.dirichlet_sides:
            self.bnd = hydrostatic_boundary(
                sc.grid, self.mmap, sc.materials, sc.dirichlet_sides,
                self.rho_w_g, sc.surface_pressure,
                include_capillary=sc.include_capillary_flux)
        else:
            self.bnd = empty_boundary()
        self.inlet = (inlet_cells(sc.grid, sc.inlet_patch)
                      if sc.inlet_patch is not None else None)
        events = set(schedule_events(sc.schedule, sc.end_time))
        events.update(t for t in sc.report_times if 0.0 < t <= sc.end_time)
        self.events = sorted(events)

        z = sc.grid.cell_coordinate(sc.grid.gravity_axis)
        self.time = 0.0
        self.p = sc.surface_pressure + self.rho_w_g * (sc.grid.top - z)
        self.s_n = np.full(sc.grid.ncells, float(sc.initial_sn))
        self.baseline_kg = total_mass(self.s_n, self.pore_volume,
                                      sc.nonwetting.density)
        self.ledger = ClampLedger()
        self.injected_kg = 0.0
        self.outflow_kg = 0.0
        self.steps = 0
        self.pressure_solves = 0
        self.dt_prev = None
        self._countdown = 0  # steps left on the frozen total velocity
        self._frozen_rate = None
        self._fx = None
        self._vt = None
        self._bnd_vt = None
        self._pcache = FactorCache()

    @property
    def state(self):
        return SimulationState(time=self.time, p_w=self.p, s_n=self.s_n)

    def _next_event(self):
        i = bisect.bisect_right(self.events, self.time)
        if i == len(self.events):
            return self.scenario.end_time
        return self.events[i]

    def step(self):
        """One saturation step; returns the dt taken."""
        sc = self.scenario
        st = evaluate_fields(self.s_n, self.params, self.inv_mu_w,
                             self.inv_mu_n)
        if sc.include_capillary_flux:
            pc, dpc_abs = st.pc, st.dpc_abs
        else:
            # capillary terms drop from the fluxes and the CFL bound alike
            pc = np.zeros_like(st.pc)
            dpc_abs = pc
        rate_vol = 0.0
        if self.inlet is not None:
            rate_vol = injection_rate(sc.schedule, self.time,
                                      sc.nonwetting.density)
        q = distribute_source(rate_vol, self.inlet, sc.grid.ncells) \
            if self.inlet is not None else np.zeros(sc.grid.ncells)

        mobs = face_upwind_mobilities(
            self.p, st.se, pc, st.lam_w, st.lam_n, self.faces,
            self.sstar_lr, self.sstar_rl, self.bnd, self.rho_w_g,
            self.rho_n_g, self.inv_mu_w)
        if self._countdown == 0 or rate_vol != self._frozen_rate:
            system = assemble_pressure_system(
                self.p, pc, mobs, self.faces, self.bnd, q, sc.grid.ncells,
                self.rho_w_g, self.rho_n_g)
            try:
                self.p = solve_pressure(system, self.p, tol=sc.pressure_tol,
                                        method=sc.solver_method,
                                        cache=self._pcache)
            except RuntimeError as exc:
                raise SimulationError(
                    f"pressure solve failed at t = {self.time:.6e} s, "
                    f"step {self.steps}: {exc}") from exc
            self._fx = phase_darcy_flux(self.p, pc, mobs, self.faces,
                                        self.bnd, self.rho_w_g, self.rho_n_g)
            self._vt = self._fx.f_w + self._fx.f_n
            self._bnd_vt = self._fx.bnd_w + self._fx.bnd_n
            self._countdown = sc.pressure_solve_every
            self._frozen_rate = rate_vol
            self.pressure_solves += 1

        f_n, bnd_n, lam = fractional_nonwetting_flux(
            self._vt, self._bnd_vt, pc, mobs, self.faces, self.bnd,
            self.rho_n_g - self.rho_w_g)
        until = self._next_event() - self.time
        try:
            dt = stable_timestep(
                f_n, bnd_n, self.bnd.cells, lam, dpc_abs, self.faces,
                self.pore_volume, self.params.mobile, q, sc.cfl,
                self.dt_prev, dt_initial=sc.dt_initial, max_dt=sc.max_dt,
                until=until)
        except RuntimeError as exc:
            raise SimulationError(
                f"timestep selection failed at t = {self.time:.6e} s, "
                f"step {self.steps}: {exc}") from exc
        self.s_n = advance_saturation(
            self.s_n, f_n, bnd_n, self.bnd.cells, self.faces, q, dt,
            self.pore_volume, self.params.s_max, self.ledger)
        if self.bnd.nfaces:
            self.outflow_kg += (float(np.sum(bnd_n))
                                * sc.nonwetting.density * dt)
        if dt == until:
            self.time = self._next_event()
        else:
            self.time += dt
        self.injected_kg += rate_vol * sc.nonwetting.density * dt
        self.dt_prev = dt
        self._countdown -= 1
        self.steps += 1
        return dt

    def sample(self):
        sc = self.scenario
        clamp_kg = self.ledger.net * sc.nonwetting.density
        part = partition_masses(
            self.s_n, self.pore_volume, sc.nonwetting.density,
            sc.pool_threshold, sc.ganglia_floor, self.baseline_kg,
            time=self.time, injected=self.injected_kg)
        plume = plume_metrics(self.s_n, sc.grid, sc.front_threshold)
        err = mass_balance_error(part.total_net, self.injected_kg,
                                 self.outflow_kg, clamp_kg)
        return ReportRow(partition=part, plume=plume,
                         outflow=self.outflow_kg, clamp=clamp_kg, error=err)

    def run(self, max_steps=None):
        sc = self.scenario
        started = _time.perf_counter()
        reports = list(sc.report_times)
        next_report = 0
        snapshots, series = [], []
        while self.time < sc.end_time:
            if max_steps is not None and self.steps >= max_steps:
                raise SimulationError(
                    f"step budget {max_steps} exhausted at "
                    f"t = {self.time:.6e} s of {sc.end_time:.6e} s")
            self.step()
            while (next_report < len(reports)
                   and reports[next_report] <= self.time):
                series.append(self.sample())
                snapshots.append(SimulationState(
                    time=self.time, p_w=self.p.copy(), s_n=self.s_n.copy()))
                next_report += 1
        return SimulationResult(
            final=self.state, snapshots=snapshots, series=series,
            steps=self.steps, pressure_solves=self.pressure_solves,
            clamp_net_kg=self.ledger.net * sc.nonwetting.density,
            wall_seconds=_time.perf_counter() - started)


def run(scenario, max_steps=None):
    """Execute one scenario start to finish."""
    return Simulator(scenario).run(max_steps=max_steps)
