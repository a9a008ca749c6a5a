"""Built-in benchmarks: the 1D displacement oracle and kernel timings."""

import time
from dataclasses import dataclass

import numpy as np

from ._core import _kernels_np as kernels_np
from .constitutive import FluidProperties, MaterialProperties
from .fields import CellParams, evaluate_fields
from .grid import BoxRegion, assign_materials, build_grid, face_transmissibilities
from .interface import face_thresholds
from .scenario import Scenario
from .simulation import run
from .transport import InjectionInterval
from .welge import FractionalFlow, l1_error, profile, welge_shock

TABLE_SAND = MaterialProperties(name="sand", permeability=1.5e-10,
                                porosity=0.3, s_wr=0.098, s_nr=0.01,
                                p_entry=1323.0, pore_size_index=3.86)
TABLE_CLAY = MaterialProperties(name="clay", permeability=5.0e-14,
                                porosity=0.2, s_wr=0.19, s_nr=0.008,
                                p_entry=4500.0, pore_size_index=3.51)
WATER = FluidProperties(density=1000.0, viscosity=1.0e-3)
PCE = FluidProperties(density=1630.0, viscosity=0.9e-3)


def buckley_leverett_scenario(cells=400, pvi=0.3, rate_vol=1.0e-6,
                              cfl=0.25):
    """Horizontal 1D column: non-wetting injected into water.

    Gravity and capillarity off; the far end holds the water pressure
    so the total velocity through the column equals the injection rate.
    The volumetric timestep budget must also respect the fractional-flow
    characteristic speed (max df/ds is about 3.6 for these curves), so
    this sharp-front case runs at cfl 0.25; looser factors let the shock
    layer outrun its stability bound and fatten into a slow overshoot.
    """
    length = 1.0
    end = pvi * TABLE_SAND.porosity * length / rate_vol
    return Scenario(
        grid=build_grid((length,), (cells,)), extents=(length,),
        materials=(TABLE_SAND,), background=0, regions=(),
        wetting=WATER, nonwetting=PCE,
        dirichlet_sides=((0, 0),), surface_pressure=0.0, initial_sn=0.0,
        inlet_patch=(), schedule=(InjectionInterval(0.0, end,
                                                    rate_vol * PCE.density),),
        end_time=end, report_times=(end,), report_interval=0.0,
        cfl=cfl, pressure_tol=1e-10, dt_initial=1e-7, max_dt=1e6,
        pressure_solve_every=1, solver_method="direct",
        pool_threshold=0.16, ganglia_floor=0.01, front_threshold=0.01,
        include_capillary_flux=False, gravity=0.0, snapshot_format="binary",
    )


@dataclass(frozen=True)
class DisplacementBenchmark:
    cells: int
    pvi: float
    shock_saturation: float
    shock_speed: float
    l1: float
    l1_limit: float
    steps: int
    wall_seconds: float

    @property
    def passed(self):
        return self.l1 < self.l1_limit


def run_buckley_leverett(cells=400, pvi=0.3):
    """Run the solver against the Welge oracle; L1 limit is 2% of the
    mobile saturation range."""
    sc = buckley_leverett_scenario(cells=cells, pvi=pvi)
    result = run(sc)
    ff = FractionalFlow(s_wr=TABLE_SAND.s_wr, s_nr=TABLE_SAND.s_nr,
                        pore_size_index=TABLE_SAND.pore_size_index,
                        mu_w=WATER.viscosity, mu_n=PCE.viscosity)
    s_shock, speed = welge_shock(ff)
    z = sc.grid.cell_coordinate(0)
    x_over_l = (sc.grid.top - z) / sc.extents[0]
    oracle = profile(x_over_l, pvi, ff)
    l1 = l1_error(result.final.s_n, oracle)
    return DisplacementBenchmark(
        cells=cells, pvi=pvi, shock_saturation=s_shock, shock_speed=speed,
        l1=l1, l1_limit=0.02 * TABLE_SAND.mobile_range, steps=result.steps,
        wall_seconds=result.wall_seconds)


def _kernel_problem(side):
    grid = build_grid((float(side), float(side), float(side)),
                      (side, side, side))
    rng = np.random.default_rng(23)
    lens = []
    for _ in range(4):
        lo = rng.uniform(0.0, side * 0.6, 3)
        hi = lo + rng.uniform(side * 0.1, side * 0.3, 3)
        lens.append(BoxRegion(material=1, box=tuple(
            (float(a), float(b)) for a, b in zip(lo, hi))))
    mmap = assign_materials(grid, [TABLE_SAND, TABLE_CLAY], 0, lens)
    faces = face_transmissibilities(grid, mmap, [TABLE_SAND, TABLE_CLAY])
    sstar_lr, sstar_rl, _ = face_thresholds(faces, [TABLE_SAND, TABLE_CLAY])
    params = CellParams.from_map(mmap, [TABLE_SAND, TABLE_CLAY])
    s_n = rng.uniform(0.0, 0.6, grid.ncells)
    st = evaluate_fields(s_n, params, 1.0e3, 1.0 / 0.9e-3)
    p = 9810.0 * (grid.top - grid.cell_coordinate(2)) \
        + rng.normal(0.0, 200.0, grid.ncells)
    mob_w, mob_n = kernels_np.face_mobilities(
        p, st.pc, st.se, st.lam_w, st.lam_n, faces.left, faces.right,
        faces.dz, sstar_lr, sstar_rl, 9810.0, 15990.3)
    f_n = faces.trans * mob_n * rng.normal(0.0, 1.0, faces.nfaces)
    return {
        "constitutive_fields": (np.ascontiguousarray(s_n), params.s_wr,
                                params.mobile, params.p_entry,
                                params.ninv_lam, params.exp_w, params.exp_n,
                                1.0e3, 1.0 / 0.9e-3, 1.0e-4),
        "face_mobilities": (p, st.pc, st.se, st.lam_w, st.lam_n, faces.left,
                            faces.right, faces.dz, sstar_lr, sstar_rl,
                            9810.0, 15990.3),
        "face_fluxes": (p, st.pc, mob_w, mob_n, faces.trans, faces.left,
                        faces.right, faces.dz, 9810.0, 15990.3),
        "divergence": (f_n, faces.left, faces.right, grid.ncells),
        "flow_sums": (f_n, faces.left, faces.right, grid.ncells),
        "capillary_sums": (mob_n, faces.trans, st.dpc_abs, faces.left,
                           faces.right, grid.ncells),
    }


def _time_call(fn, args, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_ulp_distance(out_a, out_b):
    """Worst elementwise distance across output arrays, in ulp.

    Each difference is measured against the spacing at the larger of the
    element magnitude and the array magnitude. The floor keeps entries
    that cancel to ~0 (e.g. mobilities at full water saturation, where
    1 - se**n loses all significance) from dominating: their absolute
    error is what matters, and it is tiny on the scale of the field.
    """
    if not isinstance(out_a, tuple):
        out_a, out_b = (out_a,), (out_b,)
    worst = 0.0
    for a, b in zip(out_a, out_b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.size == 0:
            continue
        mag = np.maximum(np.abs(a), np.abs(b))
        scale = np.spacing(np.maximum(mag, mag.max()))
        gap = np.abs(a - b) / scale
        worst = max(worst, float(gap.max()))
    return worst


# numpy's vectorized pow and libm pow round differently in the last bits;
# everything downstream of the constitutive power law may differ by a few
# ulp between backends. Anything above this is a real defect.
ULP_TOLERANCE = 64.0


def benchmark_kernels(side=40, repeats=5):
    """Time every kernel on both backends; returns rows of
    (name, numpy_ms, compiled_ms, speedup, max_ulp)."""
    try:
        from ._core import _kernels as kernels_c
    except ImportError:
        kernels_c = None
    problems = _kernel_problem(side)
    rows = []
    for name, args in problems.items():
        t_np, out_np = _time_call(getattr(kernels_np, name), args, repeats)
        if kernels_c is None:
            rows.append((name, t_np * 1e3, None, None, None))
            continue
        t_c, out_c = _time_call(getattr(kernels_c, name), args, repeats)
        rows.append((name, t_np * 1e3, t_c * 1e3, t_np / t_c,
                     max_ulp_distance(out_np, out_c)))
    return rows
