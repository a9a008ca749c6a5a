"""Scenario files: parsing, validation, and serialization.

A scenario is a versioned YAML document that describes one experiment
completely: domain, material table, lens regions, fluids, boundary
sides, initial saturation, injection schedule, time controls, solver
controls, and analysis thresholds. All quantities are SI and key names
carry unit suffixes. Unknown keys are rejected, and validation collects
every error (with a dotted path) instead of stopping at the first.
"""

from dataclasses import dataclass, field

import numpy as np
import yaml

from .constitutive import FluidProperties, MaterialProperties
from .grid import BoxRegion, Grid, build_grid
from .transport import InjectionInterval, inlet_cells, validate_schedule

SCENARIO_VERSION = 1

MATERIAL_KEYS = ("permeability_m2", "porosity", "residual_wetting",
                 "residual_nonwetting", "entry_pressure_pa",
                 "pore_size_index")
FLUID_KEYS = ("density_kg_per_m3", "viscosity_pa_s")
BOUNDARY_KINDS = ("hydrostatic", "no_flow")
SOLVER_METHODS = ("auto", "direct", "cg", "dense")
SNAPSHOT_FORMATS = ("binary", "ascii")


class ScenarioError(ValueError):
    """All validation problems found in one scenario file."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class Scenario:
    grid: Grid
    extents: tuple  # domain extent per axis (m), as written in the file
    materials: tuple  # MaterialProperties, file order
    background: int
    regions: tuple  # BoxRegion
    wetting: FluidProperties
    nonwetting: FluidProperties
    dirichlet_sides: tuple  # (axis, end) pairs
    surface_pressure: float
    initial_sn: float
    inlet_patch: tuple  # (lo, hi) per non-gravity axis, or None
    schedule: tuple  # InjectionInterval
    end_time: float
    report_times: tuple
    report_interval: float  # 0.0 when explicit times were given
    cfl: float
    pressure_tol: float
    dt_initial: float
    max_dt: float
    pressure_solve_every: int
    solver_method: str
    pool_threshold: float
    ganglia_floor: float
    front_threshold: float
    include_capillary_flux: bool
    gravity: float
    snapshot_format: str

    @property
    def material_names(self):
        return tuple(m.name for m in self.materials)

    def material_id(self, name):
        return self.material_names.index(name)


def axis_names(ndim):
    """Axis labels; the gravity axis is always the last one, 'z'."""
    return {1: ("z",), 2: ("x", "z"), 3: ("x", "y", "z")}[ndim]


class _Walker:
    """Tracks dotted paths and collects every validation error."""

    def __init__(self):
        self.errors = []

    def fail(self, path, message):
        self.errors.append(f"{path}: {message}")

    def section(self, doc, key, path=""):
        where = f"{path}.{key}" if path else key
        if key not in doc:
            self.fail(where, "required section missing")
            return None
        value = doc[key]
        if not isinstance(value, dict):
            self.fail(where, "must be a mapping")
            return None
        return value

    def no_extras(self, mapping, allowed, path):
        for key in mapping:
            if key not in allowed:
                self.fail(f"{path}.{key}" if path else key, "unknown key")

    def number(self, mapping, key, path, default=None, minimum=None,
               maximum=None, exclusive_min=None):
        where = f"{path}.{key}" if path else key
        if key not in mapping:
            if default is not None:
                return default
            self.fail(where, "required value missing")
            return None
        raw = mapping[key]
        if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
            self.fail(where, "must be a number")
            return None
        try:
            value = float(raw)
        except ValueError:
            self.fail(where, f"must be a number, got {raw!r}")
            return None
        if exclusive_min is not None and value <= exclusive_min:
            self.fail(where, f"must be > {exclusive_min}")
            return None
        if minimum is not None and value < minimum:
            self.fail(where, f"must be >= {minimum}")
            return None
        if maximum is not None and value > maximum:
            self.fail(where, f"must be <= {maximum}")
            return None
        return value


def _parse_domain(walker, doc):
    dom = walker.section(doc, "domain")
    if dom is None:
        return None, ()
    walker.no_extras(dom, ("extent_m", "resolution"), "domain")
    extent = dom.get("extent_m")
    res = dom.get("resolution")
    if not isinstance(extent, list) or not 1 <= len(extent) <= 3:
        walker.fail("domain.extent_m", "must be a list of 1 to 3 lengths")
        return None, ()
    if not isinstance(res, list) or len(res) != len(extent):
        walker.fail("domain.resolution", "must match extent_m in length")
        return None, ()
    try:
        extents = tuple(float(e) for e in extent)
        return build_grid(extents, res), extents
    except (TypeError, ValueError) as exc:
        walker.fail("domain", str(exc))
        return None, ()


def _parse_materials(walker, doc):
    section = walker.section(doc, "materials")
    if section is None:
        return (), {}
    materials, index = [], {}
    if not section:
        walker.fail("materials", "at least one material is required")
    for name, entry in section.items():
        path = f"materials.{name}"
        if not isinstance(entry, dict):
            walker.fail(path, "must be a mapping")
            continue
        walker.no_extras(entry, MATERIAL_KEYS, path)
        values = [walker.number(entry, key, path) for key in MATERIAL_KEYS]
        if any(v is None for v in values):
            continue
        try:
            props = MaterialProperties(name=str(name), permeability=values[0],
                                       porosity=values[1], s_wr=values[2],
                                       s_nr=values[3], p_entry=values[4],
                                       pore_size_index=values[5])
        except ValueError as exc:
            walker.fail(path, str(exc))
            continue
        index[str(name)] = len(materials)
        materials.append(props)
    return tuple(materials), index


def _parse_regions(walker, doc, grid, index):
    raw = doc.get("regions", [])
    if not isinstance(raw, list):
        walker.fail("regions", "must be a list")
        return ()
    regions = []
    for i, entry in enumerate(raw):
        path = f"regions[{i}]"
        if not isinstance(entry, dict):
            walker.fail(path, "must be a mapping")
            continue
        walker.no_extras(entry, ("material", "box_m"), path)
        name = entry.get("material")
        if name not in index:
            walker.fail(f"{path}.material", f"unknown material {name!r}")
            continue
        box = entry.get("box_m")
        ndim = grid.ndim if grid is not None else None
        if (not isinstance(box, list)
                or (ndim is not None and len(box) != ndim)
                or any(not isinstance(b, list) or len(b) != 2 for b in box)):
            walker.fail(f"{path}.box_m",
                        "must be [lo, hi] bounds for every domain axis")
            continue
        try:
            regions.append(BoxRegion(
                material=index[name],
                box=tuple((float(lo), float(hi)) for lo, hi in box)))
        except (TypeError, ValueError) as exc:
            walker.fail(f"{path}.box_m", str(exc))
    return tuple(regions)


def _parse_fluids(walker, doc):
    section = walker.section(doc, "fluids")
    out = []
    for phase in ("wetting", "nonwetting"):
        if section is None:
            out.append(None)
            continue
        entry = walker.section(section, phase, "fluids")
        if entry is None:
            out.append(None)
            continue
        path = f"fluids.{phase}"
        walker.no_extras(entry, FLUID_KEYS, path)
        rho = walker.number(entry, "density_kg_per_m3", path,
                            exclusive_min=0.0)
        mu = walker.number(entry, "viscosity_pa_s", path, exclusive_min=0.0)
        out.append(FluidProperties(density=rho, viscosity=mu)
                   if rho is not None and mu is not None else None)
    return out[0], out[1]


def _parse_boundaries(walker, doc, grid):
    section = walker.section(doc, "boundaries")
    if section is None or grid is None:
        return (), 0.0
    names = axis_names(grid.ndim)
    allowed = tuple(f"{n}_{e}" for n in names for e in ("min", "max"))
    walker.no_extras(section, allowed + ("surface_pressure_pa",),
                     "boundaries")
    sides = []
    for axis, name in enumerate(names):
        for end, suffix in enumerate(("min", "max")):
            key = f"{name}_{suffix}"
            kind = section.get(key)
            if kind is None:
                walker.fail(f"boundaries.{key}", "required side missing")
                continue
            if kind not in BOUNDARY_KINDS:
                walker.fail(f"boundaries.{key}",
                            f"must be one of {BOUNDARY_KINDS}")
                continue
            if kind == "hydrostatic":
                sides.append((axis, end))
    surface = walker.number(section, "surface_pressure_pa", "boundaries",
                            default=0.0)
    return tuple(sides), surface


def _parse_injection(walker, doc, grid):
    if "injection" not in doc:
        return None, ()
    section = walker.section(doc, "injection")
    if section is None:
        return None, ()
    walker.no_extras(section, ("patch_m", "schedule"), "injection")
    patch = section.get("patch_m")
    ndim = grid.ndim if grid is not None else None
    parsed_patch = None
    if (not isinstance(patch, list)
            or any(not isinstance(b, list) or len(b) != 2 for b in patch)
            or (ndim is not None and len(patch) != ndim - 1)):
        walker.fail("injection.patch_m",
                    "must be [lo, hi] bounds for every non-gravity axis")
    else:
        parsed_patch = tuple((float(lo), float(hi)) for lo, hi in patch)
        if grid is not None:
            try:
                inlet_cells(grid, parsed_patch)
            except ValueError as exc:
                walker.fail("injection.patch_m", str(exc))
                parsed_patch = None
    raw_sched = section.get("schedule")
    intervals = []
    if not isinstance(raw_sched, list) or not raw_sched:
        walker.fail("injection.schedule",
                    "must be a non-empty list of intervals")
    else:
        for i, entry in enumerate(raw_sched):
            path = f"injection.schedule[{i}]"
            if not isinstance(entry, dict):
                walker.fail(path, "must be a mapping")
                continue
            walker.no_extras(entry, ("start_s", "stop_s", "rate_kg_per_s"),
                             path)
            start = walker.number(entry, "start_s", path, minimum=0.0)
            stop = walker.number(entry, "stop_s", path)
            rate = walker.number(entry, "rate_kg_per_s", path)
            if None in (start, stop, rate):
                continue
            try:
                intervals.append(InjectionInterval(start, stop, rate))
            except ValueError as exc:
                walker.fail(path, str(exc))
        try:
            intervals = validate_schedule(intervals)
        except ValueError as exc:
            walker.fail("injection.schedule", str(exc))
    return parsed_patch, tuple(intervals)


def _parse_time(walker, doc):
    section = walker.section(doc, "time")
    if section is None:
        return None, (), 0.0
    walker.no_extras(section, ("end_s", "report_interval_s",
                               "report_times_s"), "time")
    end = walker.number(section, "end_s", "time", exclusive_min=0.0)
    interval = 0.0
    times = []
    if "report_times_s" in section and "report_interval_s" in section:
        walker.fail("time", "give report_interval_s or report_times_s, "
                            "not both")
    elif "report_times_s" in section:
        raw = section["report_times_s"]
        if not isinstance(raw, list) or not raw:
            walker.fail("time.report_times_s", "must be a non-empty list")
        else:
            try:
                times = [float(t) for t in raw]
            except (TypeError, ValueError):
                walker.fail("time.report_times_s", "must be numbers")
                times = []
            if times and end is not None:
                if any(b <= a for a, b in zip(times, times[1:])):
                    walker.fail("time.report_times_s",
                                "must be strictly increasing")
                elif times[0] <= 0.0 or times[-1] > end:
                    walker.fail("time.report_times_s",
                                "must lie in (0, end_s]")
    else:
        interval = walker.number(section, "report_interval_s", "time",
                                 exclusive_min=0.0)
        if interval is not None and end is not None:
            times = [interval * k
                     for k in range(1, int(np.floor(end / interval)) + 1)]
            if not times or times[-1] < end:
                times.append(end)
        else:
            interval = interval or 0.0
    return end, tuple(times), interval


def _parse_solver(walker, doc):
    section = doc.get("solver", {})
    if not isinstance(section, dict):
        walker.fail("solver", "must be a mapping")
        section = {}
    walker.no_extras(section, ("cfl", "pressure_tol", "initial_dt_s",
                               "max_dt_s", "pressure_solve_every", "method"),
                     "solver")
    cfl = walker.number(section, "cfl", "solver", default=0.5,
                        exclusive_min=0.0, maximum=1.0)
    tol = walker.number(section, "pressure_tol", "solver", default=1e-10,
                        exclusive_min=0.0)
    dt0 = walker.number(section, "initial_dt_s", "solver", default=1e-7,
                        exclusive_min=0.0)
    max_dt = walker.number(section, "max_dt_s", "solver", default=86400.0,
                           exclusive_min=0.0)
    every = section.get("pressure_solve_every", 1)
    if not isinstance(every, int) or isinstance(every, bool) or every < 1:
        walker.fail("solver.pressure_solve_every", "must be an integer >= 1")
        every = 1
    method = section.get("method", "auto")
    if method not in SOLVER_METHODS:
        walker.fail("solver.method", f"must be one of {SOLVER_METHODS}")
        method = "auto"
    return cfl, tol, dt0, max_dt, every, method


def _parse_analysis(walker, doc):
    section = doc.get("analysis", {})
    if not isinstance(section, dict):
        walker.fail("analysis", "must be a mapping")
        section = {}
    walker.no_extras(section, ("pool_threshold", "ganglia_floor",
                               "front_threshold"), "analysis")
    pool = walker.number(section, "pool_threshold", "analysis", default=0.16,
                         exclusive_min=0.0, maximum=1.0)
    floor = walker.number(section, "ganglia_floor", "analysis", default=0.01,
                          minimum=0.0, maximum=1.0)
    front = walker.number(section, "front_threshold", "analysis",
                          default=0.01, exclusive_min=0.0, maximum=1.0)
    if pool is not None and floor is not None and floor >= pool:
        walker.fail("analysis", "ganglia_floor must be below pool_threshold")
    return pool, floor, front


def _parse_physics(walker, doc):
    section = doc.get("physics", {})
    if not isinstance(section, dict):
        walker.fail("physics", "must be a mapping")
        section = {}
    walker.no_extras(section, ("include_capillary_flux", "gravity_m_per_s2"),
                     "physics")
    cap = section.get("include_capillary_flux", True)
    if not isinstance(cap, bool):
        walker.fail("physics.include_capillary_flux", "must be a boolean")
        cap = True
    g = walker.number(section, "gravity_m_per_s2", "physics", default=9.81,
                      minimum=0.0)
    return cap, g


def _parse_output(walker, doc):
    section = doc.get("output", {})
    if not isinstance(section, dict):
        walker.fail("output", "must be a mapping")
        section = {}
    walker.no_extras(section, ("snapshot_format",), "output")
    fmt = section.get("snapshot_format", "binary")
    if fmt not in SNAPSHOT_FORMATS:
        walker.fail("output.snapshot_format",
                    f"must be one of {SNAPSHOT_FORMATS}")
        fmt = "binary"
    return fmt


TOP_LEVEL_KEYS = ("version", "domain", "materials", "background_material",
                  "regions", "fluids", "boundaries", "initial", "injection",
                  "time", "solver", "analysis", "physics", "output")


def parse_scenario_text(text, source="<scenario>"):
    """Parse and validate a scenario document; raises ScenarioError with
    every problem found."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError([f"{source}: not valid YAML: {exc}"])
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ScenarioError([f"{source}: top level must be a mapping"])

    walker = _Walker()
    walker.no_extras(doc, TOP_LEVEL_KEYS, "")
    version = doc.get("version")
    if version is None:
        walker.fail("version", "required value missing")
    elif version != SCENARIO_VERSION:
        walker.fail("version", f"unsupported version {version!r}; this "
                               f"build reads version {SCENARIO_VERSION}")

    grid, extents = _parse_domain(walker, doc)
    materials, index = _parse_materials(walker, doc)
    background_name = doc.get("background_material")
    if "background_material" not in doc:
        walker.fail("background_material", "required value missing")
        background = 0
    elif background_name not in index:
        walker.fail("background_material",
                    f"unknown material {background_name!r}")
        background = 0
    else:
        background = index[background_name]
    regions = _parse_regions(walker, doc, grid, index)
    wetting, nonwetting = _parse_fluids(walker, doc)
    sides, surface = _parse_boundaries(walker, doc, grid)

    initial = walker.section(doc, "initial")
    initial_sn = None
    if initial is not None:
        walker.no_extras(initial, ("nonwetting_saturation",), "initial")
        initial_sn = walker.number(initial, "nonwetting_saturation",
                                   "initial", minimum=0.0, maximum=1.0)
    if initial_sn is not None and materials:
        ceiling = min(1.0 - m.s_wr for m in materials)
        if initial_sn > ceiling:
            walker.fail("initial.nonwetting_saturation",
                        f"exceeds the tightest ceiling 1 - s_wr = {ceiling}")

    patch, schedule = _parse_injection(walker, doc, grid)
    end, report_times, report_interval = _parse_time(walker, doc)
    cfl, tol, dt0, max_dt, every, method = _parse_solver(walker, doc)
    pool, floor, front = _parse_analysis(walker, doc)
    include_cap, gravity = _parse_physics(walker, doc)
    fmt = _parse_output(walker, doc)

    if walker.errors:
        raise ScenarioError(walker.errors)

    return Scenario(
        grid=grid, extents=extents, materials=materials, background=background,
        regions=regions, wetting=wetting, nonwetting=nonwetting,
        dirichlet_sides=sides, surface_pressure=surface,
        initial_sn=initial_sn, inlet_patch=patch, schedule=schedule,
        end_time=end, report_times=report_times,
        report_interval=report_interval, cfl=cfl, pressure_tol=tol,
        dt_initial=dt0, max_dt=max_dt, pressure_solve_every=every,
        solver_method=method, pool_threshold=pool, ganglia_floor=floor,
        front_threshold=front, include_capillary_flux=include_cap,
        gravity=gravity, snapshot_format=fmt,
    )


def parse_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_text(fh.read(), source=str(path))


def scenario_to_dict(sc):
    """Rebuild the document tree; parse(serialize(parse(x))) == parse(x)."""
    names = axis_names(sc.grid.ndim)
    boundaries = {}
    for axis, name in enumerate(names):
        for end, suffix in enumerate(("min", "max")):
            kind = "hydrostatic" if (axis, end) in sc.dirichlet_sides \
                else "no_flow"
            boundaries[f"{name}_{suffix}"] = kind
    boundaries["surface_pressure_pa"] = sc.surface_pressure

    doc = {
        "version": SCENARIO_VERSION,
        "domain": {
            "extent_m": list(sc.extents),
            "resolution": list(sc.grid.dims),
        },
        "materials": {
            m.name: {
                "permeability_m2": m.permeability,
                "porosity": m.porosity,
                "residual_wetting": m.s_wr,
                "residual_nonwetting": m.s_nr,
                "entry_pressure_pa": m.p_entry,
                "pore_size_index": m.pore_size_index,
            } for m in sc.materials
        },
        "background_material": sc.materials[sc.background].name,
        "regions": [
            {"material": sc.materials[r.material].name,
             "box_m": [list(b) for b in r.box]}
            for r in sc.regions
        ],
        "fluids": {
            "wetting": {"density_kg_per_m3": sc.wetting.density,
                        "viscosity_pa_s": sc.wetting.viscosity},
            "nonwetting": {"density_kg_per_m3": sc.nonwetting.density,
                           "viscosity_pa_s": sc.nonwetting.viscosity},
        },
        "boundaries": boundaries,
        "initial": {"nonwetting_saturation": sc.initial_sn},
        "time": {"end_s": sc.end_time},
        "solver": {"cfl": sc.cfl, "pressure_tol": sc.pressure_tol,
                   "initial_dt_s": sc.dt_initial, "max_dt_s": sc.max_dt,
                   "pressure_solve_every": sc.pressure_solve_every,
                   "method": sc.solver_method},
        "analysis": {"pool_threshold": sc.pool_threshold,
                     "ganglia_floor": sc.ganglia_floor,
                     "front_threshold": sc.front_threshold},
        "physics": {"include_capillary_flux": sc.include_capillary_flux,
                    "gravity_m_per_s2": sc.gravity},
        "output": {"snapshot_format": sc.snapshot_format},
    }
    if sc.report_interval > 0.0:
        doc["time"]["report_interval_s"] = sc.report_interval
    else:
        doc["time"]["report_times_s"] = list(sc.report_times)
    if sc.inlet_patch is not None:
        doc["injection"] = {
            "patch_m": [list(b) for b in sc.inlet_patch],
            "schedule": [{"start_s": iv.start, "stop_s": iv.stop,
                          "rate_kg_per_s": iv.mass_rate}
                         for iv in sc.schedule],
        }
    if not doc["regions"]:
        del doc["regions"]
    return doc


def serialize_scenario(sc):
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False,
                          default_flow_style=None)


def bundled_scenario_path(name):
    """Filesystem path of a scenario shipped with the package."""
    from importlib import resources

    if not name.endswith(".yaml"):
        name += ".yaml"
    return resources.files("lensflow") / "scenarios" / name
