"""Two-phase immiscible flow simulator for DNAPL infiltration through
layered aquifers with capillary entry-pressure barriers."""

__version__ = "0.1.0"

from ._core import backend_name
from .analysis import (MassPartition, PlumeMetrics, mass_balance_error,
                       partition_masses, plume_metrics, total_mass)
from .constitutive import (FluidProperties, MaterialProperties,
                           capillary_pressure, effective_saturation,
                           inverse_capillary_pressure, relperm_nonwetting,
                           relperm_wetting)
from .grid import BoxRegion, Grid, assign_materials, build_grid
from .interface import threshold_saturation
from .reporting import CSV_HEADER, write_timeseries
from .scenario import (Scenario, ScenarioError, bundled_scenario_path,
                       parse_scenario, parse_scenario_text,
                       serialize_scenario)
from .simulation import (SimulationError, SimulationResult, Simulator, run)
from .transport import InjectionInterval, TimestepUnderflowError
from .vtkio import read_snapshot, write_snapshot
from .welge import FractionalFlow, welge_shock

__all__ = [
    "BoxRegion",
    "CSV_HEADER",
    "FluidProperties",
    "FractionalFlow",
    "Grid",
    "InjectionInterval",
    "MassPartition",
    "MaterialProperties",
    "PlumeMetrics",
    "Scenario",
    "ScenarioError",
    "SimulationError",
    "SimulationResult",
    "Simulator",
    "TimestepUnderflowError",
    "__version__",
    "assign_materials",
    "backend_name",
    "build_grid",
    "bundled_scenario_path",
    "capillary_pressure",
    "effective_saturation",
    "inverse_capillary_pressure",
    "mass_balance_error",
    "parse_scenario",
    "parse_scenario_text",
    "partition_masses",
    "plume_metrics",
    "read_snapshot",
    "relperm_nonwetting",
    "relperm_wetting",
    "run",
    "serialize_scenario",
    "threshold_saturation",
    "total_mass",
    "welge_shock",
    "write_snapshot",
    "write_timeseries",
]
