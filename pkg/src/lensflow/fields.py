"""Per-cell material parameter tables and constitutive field evaluation."""

from dataclasses import dataclass

import numpy as np

from . import _core as kernels
from .constitutive import SE_FLOOR


@dataclass(frozen=True)
class CellParams:
    """Material parameters gathered onto cells (flat C order)."""

    porosity: np.ndarray
    s_wr: np.ndarray
    mobile: np.ndarray  # 1 - s_wr - s_nr
    p_entry: np.ndarray
    ninv_lam: np.ndarray  # -1/lambda
    exp_w: np.ndarray  # (2 + 3*lambda)/lambda
    exp_n: np.ndarray  # (2 + lambda)/lambda
    s_max: np.ndarray  # non-wetting ceiling, 1 - s_wr

    @classmethod
    def from_map(cls, material_map, materials):
        ids = material_map.flat

        def gather(values):
            return np.array(values, dtype=float)[ids]

        lam = [m.pore_size_index for m in materials]
        return cls(
            porosity=gather([m.porosity for m in materials]),
            s_wr=gather([m.s_wr for m in materials]),
            mobile=gather([m.mobile_range for m in materials]),
            p_entry=gather([m.p_entry for m in materials]),
            ninv_lam=gather([-1.0 / l for l in lam]),
            exp_w=gather([(2.0 + 3.0 * l) / l for l in lam]),
            exp_n=gather([(2.0 + l) / l for l in lam]),
            s_max=gather([1.0 - m.s_wr for m in materials]),
        )


@dataclass(frozen=True)
class CellState:
    """Constitutive fields evaluated at one saturation field."""

    se: np.ndarray  # effective wetting saturation
    pc: np.ndarray  # capillary pressure (Pa)
    lam_w: np.ndarray  # wetting mobility kr/mu
    lam_n: np.ndarray
    dpc_abs: np.ndarray  # |dpc/dS_w|, for the capillary stability bound


def evaluate_fields(s_n, params, inv_mu_w, inv_mu_n):
    se, pc, lam_w, lam_n, dpc_abs = kernels.constitutive_fields(
        np.ascontiguousarray(s_n), params.s_wr, params.mobile,
        params.p_entry, params.ninv_lam, params.exp_w, params.exp_n,
        inv_mu_w, inv_mu_n, SE_FLOOR,
    )
    return CellState(se=se, pc=pc, lam_w=lam_w, lam_n=lam_n, dpc_abs=dpc_abs)
