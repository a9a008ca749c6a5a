"""Kernel backend selection.

The compiled Cython kernels are preferred; the vectorized numpy
implementation is the fallback (missing build, or forced with
LENSFLOW_PURE_PYTHON=1). Both expose the same functions and produce
bitwise-identical results.
"""

import os

if os.environ.get("LENSFLOW_PURE_PYTHON", "") == "1":
    from . import _kernels_np as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_np as _impl

        BACKEND = "numpy"

constitutive_fields = _impl.constitutive_fields
face_mobilities = _impl.face_mobilities
face_fluxes = _impl.face_fluxes
divergence = _impl.divergence
flow_sums = _impl.flow_sums
capillary_sums = _impl.capillary_sums


def backend_name():
    """Which kernel implementation is active ("compiled" or "numpy")."""
    return BACKEND
