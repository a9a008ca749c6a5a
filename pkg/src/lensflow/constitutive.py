"""Brooks-Corey constitutive relations for two immiscible phases.

Capillary pressure follows the Brooks-Corey law and relative
permeabilities the matching Burdine forms. All quantities are SI:
pressures in Pa, permeability in m^2, viscosity in Pa*s.
"""

from dataclasses import dataclass

import numpy as np

# Floor applied to the effective saturation inside the capillary law so
# pc stays finite as se -> 0.
SE_FLOOR = 1.0e-4


@dataclass(frozen=True)
class MaterialProperties:
    """One porous medium: intrinsic and Brooks-Corey parameters."""

    name: str
    permeability: float  # intrinsic permeability (m^2)
    porosity: float
    s_wr: float  # residual wetting saturation
    s_nr: float  # residual non-wetting saturation
    p_entry: float  # entry (displacement) pressure (Pa)
    pore_size_index: float  # Brooks-Corey lambda

    def __post_init__(self):
        if self.permeability <= 0.0:
            raise ValueError(f"{self.name}: permeability must be positive")
        if not 0.0 < self.porosity <= 1.0:
            raise ValueError(f"{self.name}: porosity must lie in (0, 1]")
        if self.s_wr < 0.0 or self.s_nr < 0.0:
            raise ValueError(f"{self.name}: residual saturations must be >= 0")
        if self.s_wr + self.s_nr >= 1.0:
            raise ValueError(f"{self.name}: residual saturations must sum below 1")
        if self.p_entry <= 0.0:
            raise ValueError(f"{self.name}: entry pressure must be positive")
        if self.pore_size_index <= 0.0:
            raise ValueError(f"{self.name}: pore size index must be positive")

    @property
    def mobile_range(self):
        """Saturation span over which either phase is mobile."""
        return 1.0 - self.s_wr - self.s_nr


@dataclass(frozen=True)
class FluidProperties:
    """One incompressible phase."""

    density: float  # kg/m^3
    viscosity: float  # Pa*s

    def __post_init__(self):
        if self.density <= 0.0:
            raise ValueError("fluid density must be positive")
        if self.viscosity <= 0.0:
            raise ValueError("fluid viscosity must be positive")


def effective_saturation(s_w, props):
    """Normalize wetting saturation to [0, 1] over the mobile range.

    Out-of-range s_w clamps; callers that care about the clamped mass
    account for it in their own ledgers.
    """
    se = (s_w - props.s_wr) / props.mobile_range
    return np.clip(se, 0.0, 1.0)


def capillary_pressure(se, props):
    """Brooks-Corey pc = p_entry * se**(-1/lambda), floored at SE_FLOOR.

    Returns exactly p_entry at se = 1.
    """
    se = np.maximum(se, SE_FLOOR)
    return props.p_entry * se ** (-1.0 / props.pore_size_index)


def inverse_capillary_pressure(pc, props):
    """Effective saturation at a given capillary pressure.

    Below the entry pressure the medium stays fully water saturated
    (se = 1); above it the Brooks-Corey law is inverted.
    """
    ratio = np.maximum(pc / props.p_entry, 1.0)
    out = ratio ** (-props.pore_size_index)
    if np.ndim(pc) == 0:
        return float(out)
    return out


def relperm_wetting(se, props):
    """Burdine wetting relative permeability, se**((2 + 3*lambda)/lambda)."""
    se = np.clip(se, 0.0, 1.0)
    lam = props.pore_size_index
    return se ** ((2.0 + 3.0 * lam) / lam)


def relperm_nonwetting(se, props):
    """Burdine non-wetting relative permeability.

    (1 - se)**2 * (1 - se**((2 + lambda)/lambda)); exactly zero at se = 1
    so a water-saturated cell never conducts the non-wetting phase.
    """
    se = np.clip(se, 0.0, 1.0)
    lam = props.pore_size_index
    return (1.0 - se) ** 2 * (1.0 - se ** ((2.0 + lam) / lam))


def phase_mobility(kr, viscosity):
    """Mobility kr/mu (1/(Pa*s))."""
    return kr / viscosity
