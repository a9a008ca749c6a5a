"""Implicit pressure step of the IMPES split and phase Darcy fluxes.

Total-velocity formulation on a two-point flux stencil: the unknown is
the wetting pressure; capillary and gravity contributions enter the
right-hand side explicitly from the current saturation field. Face
mobilities (including the entry-pressure gate) are frozen from the
pre-solve pressure field and reused for the post-solve flux evaluation,
so the discrete total flux divergence matches the solved system
exactly.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from . import _core as kernels
from .grid import boundary_cell_indices

# Largest system the dense oracle fallback accepts.
DENSE_LIMIT = 10_000
# Cell count above which "auto" switches from sparse LU to PCG.
DIRECT_LIMIT = 60_000
# SuperLU options for the SPD M-matrix systems assembled here: symmetric
# minimum-degree ordering roughly halves fill vs COLAMD, and diagonal
# dominance makes pivoting unnecessary. The post-solve residual contract
# is the safety net.
_SPLU_OPTS = dict(permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0)


class SingularSystemError(RuntimeError):
    """All-no-flow boundary with a nonzero net source."""


class SolverError(RuntimeError):
    """Linear solve did not meet the residual contract."""


@dataclass(frozen=True)
class BoundaryFaces:
    """Hydrostatic Dirichlet faces: one entry per boundary face."""

    cells: np.ndarray  # flat cell id
    trans: np.ndarray  # A * k_cell / (d/2)
    dz: np.ndarray  # z_face - z_cell
    p_bc: np.ndarray  # prescribed wetting pressure at the face (Pa)
    pc_out: np.ndarray  # exterior capillary pressure (entry pressure)

    @property
    def nfaces(self):
        return self.cells.size


def empty_boundary():
    z = np.empty(0)
    return BoundaryFaces(
        cells=np.empty(0, dtype=np.int64), trans=z, dz=z, p_bc=z, pc_out=z
    )


def hydrostatic_boundary(grid, material_map, materials, sides, rho_w_g,
                         surface_pressure=0.0, include_capillary=True):
    """Dirichlet faces for the given domain sides.

    `sides` is an iterable of (axis, end) with end 0 = low, 1 = high.
    The exterior is the same material, fully water saturated, at
    hydrostatic wetting pressure measured from the domain top.
    """
    p_entry = np.array([m.p_entry for m in materials])
    perm = np.array([m.permeability for m in materials])
    cells, trans, dz, p_bc, pc_out = [], [], [], [], []
    for axis, end in sides:
        c = boundary_cell_indices(grid, axis, end)
        k = perm[material_map.flat[c]]
        h = grid.spacing[axis]
        trans.append(grid.face_area(axis) * k / (0.5 * h))
        if axis == grid.gravity_axis:
            step = 0.5 * h if end else -0.5 * h
        else:
            step = 0.0
        dz.append(np.full(c.size, step))
        z_face = grid.cell_coordinate(grid.gravity_axis)[c] + step
        p_bc.append(surface_pressure + rho_w_g * (grid.top - z_face))
        if include_capillary:
            pc_out.append(p_entry[material_map.flat[c]])
        else:
            pc_out.append(np.zeros(c.size))
        cells.append(c)
    if not cells:
        return empty_boundary()
    return BoundaryFaces(
        cells=np.concatenate(cells).astype(np.int64),
        trans=np.concatenate(trans),
        dz=np.concatenate(dz),
        p_bc=np.concatenate(p_bc),
        pc_out=np.concatenate(pc_out),
    )


@dataclass(frozen=True)
class FaceMobilities:
    """Upwinded phase mobilities, frozen for one pressure step."""

    mob_w: np.ndarray  # interior faces
    mob_n: np.ndarray
    bnd_mob_w: np.ndarray  # boundary faces
    bnd_mob_n: np.ndarray


def face_upwind_mobilities(p, se, pc, lam_w, lam_n, faces, sstar_lr, sstar_rl,
                           bnd, rho_w_g, rho_n_g, inv_mu_w):
    """Phase-potential upwinding with the entry-pressure gate applied.

    Boundary inflow carries exterior properties: full wetting mobility,
    zero non-wetting mobility (no DNAPL outside the domain).
    """
    mob_w, mob_n = kernels.face_mobilities(
        p, pc, se, lam_w, lam_n, faces.left, faces.right, faces.dz,
        sstar_lr, sstar_rl, rho_w_g, rho_n_g,
    )
    c = bnd.cells
    dpw = p[c] - bnd.p_bc - rho_w_g * bnd.dz
    bnd_mob_w = np.where(dpw >= 0.0, lam_w[c], inv_mu_w)
    dpn = (p[c] - bnd.p_bc) + (pc[c] - bnd.pc_out) - rho_n_g * bnd.dz
    bnd_mob_n = np.where(dpn >= 0.0, lam_n[c], 0.0)
    return FaceMobilities(mob_w, mob_n, bnd_mob_w, bnd_mob_n)


@dataclass(frozen=True)
class PressureSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dirichlet: bool  # at least one Dirichlet coupling present
    # cells carrying a positive Dirichlet conductance; pressure is anchored
    # only in regions connected to one of these
    anchors: np.ndarray = None
    # some interior face has zero total mobility, so regions may be sealed
    # off from the anchors and need grounding before the solve
    zero_faces: bool = False


@dataclass(frozen=True)
class PhaseFluxes:
    """Volumetric fluxes (m^3/s); interior positive low -> high cell,
    boundary positive outward."""

    f_w: np.ndarray
    f_n: np.ndarray
    bnd_w: np.ndarray
    bnd_n: np.ndarray


def assemble_pressure_system(p, pc, mobs, faces, bnd, q_vol, ncells,
                             rho_w_g, rho_n_g):
    """Build A p_w = b from frozen face mobilities.

    `q_vol` is the total volumetric source per cell (m^3/s). Gravity and
    capillary face terms go to the right-hand side; the matrix carries
    only the total-mobility conductances, so it is symmetric positive
    semidefinite with Dirichlet couplings on the diagonal.
    """
    lam_t = mobs.mob_w + mobs.mob_n
    c = faces.trans * lam_t
    gamma = faces.trans * mobs.mob_n * (pc[faces.left] - pc[faces.right]) \
        - faces.trans * (mobs.mob_w * rho_w_g + mobs.mob_n * rho_n_g) * faces.dz

    rows = [faces.left, faces.right, faces.left, faces.right]
    cols = [faces.left, faces.right, faces.right, faces.left]
    vals = [c, c, -c, -c]
    b = q_vol + kernels.divergence(gamma, faces.left, faces.right, ncells)

    anchors = np.empty(0, dtype=np.int64)
    if bnd.nfaces:
        lam_t_b = mobs.bnd_mob_w + mobs.bnd_mob_n
        cb = bnd.trans * lam_t_b
        gamma_b = bnd.trans * mobs.bnd_mob_n * (pc[bnd.cells] - bnd.pc_out) \
            - bnd.trans * (mobs.bnd_mob_w * rho_w_g + mobs.bnd_mob_n * rho_n_g) * bnd.dz
        rows.append(bnd.cells)
        cols.append(bnd.cells)
        vals.append(cb)
        np.add.at(b, bnd.cells, cb * bnd.p_bc - gamma_b)
        anchors = bnd.cells[cb > 0.0]

    matrix = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(ncells, ncells),
    ).tocsr()
    return PressureSystem(
        matrix=matrix, rhs=b, dirichlet=bool(anchors.size), anchors=anchors,
        zero_faces=bool(c.size and np.any(c == 0.0)),
    )


def _ground_isolated(A, anchors, b):
    """Pin one cell in every region not connected to a Dirichlet anchor.

    Zero-mobility faces (a fully drained cell behind an entry-pressure
    gate) can seal a region off from every Dirichlet coupling, leaving a
    pure-Neumann diagonal block whose pressure is defined only up to a
    constant. Grounding one cell per sealed region removes the null
    space without touching anchored cells; with a compatible right-hand
    side the grounded cell's increment is zero, so in-block pressure
    differences (and hence fluxes) are unaffected.
    """
    coupled = A.copy()
    coupled.eliminate_zeros()  # stored zeros are not couplings
    ncomp, labels = csgraph.connected_components(coupled, directed=False)
    if ncomp == 1:
        return A
    anchored = np.zeros(ncomp, dtype=bool)
    anchored[labels[anchors]] = True
    if anchored.all():
        return A
    diag = A.diagonal()
    rows, pins = [], []
    for comp in np.flatnonzero(~anchored):
        cells = np.flatnonzero(labels == comp)
        net = b[cells].sum()
        if abs(net) > 1e-8 * max(np.abs(b[cells]).sum(), 1e-300):
            raise SingularSystemError(
                "a region sealed off by zero face mobility receives a "
                "nonzero net source; its pressure has no solution"
            )
        pin = diag[cells].max()
        rows.append(cells[0])
        pins.append(pin if pin > 0.0 else 1.0)
    ground = sp.coo_matrix((pins, (rows, rows)), shape=A.shape)
    return (A + ground).tocsr()


class FactorCache:
    """Sparse LU factor reused as a preconditioner across solves.

    Pressure matrices drift slowly between steps (only the face
    mobilities move), so a stale factor keeps Krylov iterations in the
    single digits. It is rebuilt whenever one restart cycle fails to
    reach the residual target, so staleness can cost time but never
    accuracy.
    """

    def __init__(self, restart=24, cooldown=8):
        self.factor = None
        self.restart = restart
        # after a failed reuse, skip this many solves before retrying;
        # during fast drift the attempts themselves are the waste
        self.cooldown = cooldown
        self._skip = 0
        self.rebuilds = 0

    def solve(self, A, r, atol):
        if self.factor is not None and self._skip == 0:
            M = spla.LinearOperator(A.shape, matvec=self.factor.solve)
            dp, info = spla.gmres(A, r, M=M, rtol=0.0, atol=atol,
                                  restart=self.restart, maxiter=1)
            # trust the true residual, not the solver's stopping rule
            if info == 0 and np.linalg.norm(A @ dp - r) <= atol:
                return dp
            self._skip = self.cooldown
        elif self._skip > 0:
            self._skip -= 1
        self.factor = spla.splu(A.tocsc(), **_SPLU_OPTS)
        self.rebuilds += 1
        return self.factor.solve(r)


def solve_pressure(system, p_prev=None, tol=1e-10, method="auto", maxiter=5000,
                   cache=None):
    """Solve for the wetting pressure to the relative-residual contract.

    Solves the increment system A dp = b - A p_prev (exact for a linear
    system, and it keeps near-equilibrium states at machine noise). A
    singular all-no-flow system with compatible sources is pinned at
    cell 0; an incompatible one raises SingularSystemError. Regions
    sealed off from the Dirichlet anchors by zero-mobility faces are
    grounded the same way, one pin per sealed region. With a
    FactorCache, the direct method reuses the previous factorization as
    a preconditioner and only refactors when that stops converging.
    """
    A, b = system.matrix, system.rhs
    n = b.size
    if p_prev is None:
        p_prev = np.zeros(n)
    r = b - A @ p_prev

    A_solve = A
    if not system.dirichlet:
        scale = np.sum(np.abs(b))
        if abs(np.sum(b)) > 1e-8 * max(scale, 1e-300):
            raise SingularSystemError(
                "all boundaries are no-flow but the net source is nonzero; "
                "pressure has no solution (add a Dirichlet side or balance "
                "the sources)"
            )
        pin = A.diagonal().max()
        if pin <= 0.0:
            pin = 1.0
        A_solve = A + sp.coo_matrix(([pin], ([0], [0])), shape=A.shape).tocsr()
    elif system.zero_faces:
        A_solve = _ground_isolated(A, system.anchors, b)

    if method == "auto":
        method = "direct" if n <= DIRECT_LIMIT else "cg"

    if method == "direct":
        if cache is not None:
            bnorm = np.linalg.norm(b)
            dp = cache.solve(A_solve, r, atol=0.1 * tol * max(bnorm, 1e-300))
        else:
            dp = spla.splu(A_solve.tocsc(), **_SPLU_OPTS).solve(r)
    elif method == "dense":
        if n > DENSE_LIMIT:
            raise SolverError(f"dense method limited to {DENSE_LIMIT} cells")
        dp = np.linalg.solve(A_solve.toarray(), r)
    elif method == "cg":
        diag = A_solve.diagonal()
        M = sp.diags(np.where(diag > 0.0, 1.0 / diag, 1.0))
        history = []
        dp, info = spla.cg(
            A_solve, r, rtol=max(tol * 1e-3, 1e-14), atol=0.0, M=M,
            maxiter=maxiter, callback=lambda x: history.append(len(history)),
        )
        if info != 0:
            res = np.linalg.norm(A_solve @ dp - r)
            raise SolverError(
                f"cg failed to converge after {len(history)} iterations; "
                f"final absolute residual {res:.3e}"
            )
    else:
        raise ValueError(f"unknown solver method {method!r}")

    p = p_prev + dp
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(A @ p - b)
    if res > tol * max(bnorm, 1e-300):
        raise SolverError(
            f"residual contract violated: |Ax-b|/|b| = {res / max(bnorm, 1e-300):.3e} "
            f"> tol {tol:.1e} (method {method})"
        )
    return p


def phase_darcy_flux(p, pc, mobs, faces, bnd, rho_w_g, rho_n_g):
    """Per-face phase fluxes from the solved pressure and frozen mobilities."""
    f_w, f_n = kernels.face_fluxes(
        p, pc, mobs.mob_w, mobs.mob_n, faces.trans, faces.left, faces.right,
        faces.dz, rho_w_g, rho_n_g,
    )
    c = bnd.cells
    dp = p[c] - bnd.p_bc
    bnd_w = bnd.trans * mobs.bnd_mob_w * (dp - rho_w_g * bnd.dz)
    bnd_n = bnd.trans * mobs.bnd_mob_n * (dp + (pc[c] - bnd.pc_out) - rho_n_g * bnd.dz)
    return PhaseFluxes(f_w=f_w, f_n=f_n, bnd_w=bnd_w, bnd_n=bnd_n)


def fractional_nonwetting_flux(vt, bnd_vt, pc, mobs, faces, bnd, drho_g):
    """Non-wetting flux in fractional-flow form at a given total velocity.

    Eliminating the pressure gradient between the two phase Darcy fluxes
    gives, per face,

        F_n = (mob_n/mob_t) vT + T lam ((pc_L - pc_R) - (rho_n-rho_w) g dz)

    with lam = mob_n mob_w / mob_t. `vt` is the frozen total velocity
    from the last pressure solve; the capillary and buoyancy terms come
    from the current state. Both are throttled by the harmonic mobility
    lam: a phase can only rearrange as fast as the other counterflows,
    which is what stalls compaction of DNAPL pools (the water there is
    nearly immobile) and keeps the explicit diffusion limit mild.

    Faces where both phases are immobile carry zero flux. Returns the
    interior fluxes, the boundary fluxes (one-sided, against the fixed
    outside state), and the face lam for the diffusion step bound.
    """
    mt = mobs.mob_w + mobs.mob_n
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(mt > 0.0, mobs.mob_n / mt, 0.0)
        lam = np.where(mt > 0.0, mobs.mob_n * mobs.mob_w / mt, 0.0)
    dpc = pc[faces.left] - pc[faces.right]
    f_n = frac * vt + faces.trans * lam * (dpc - drho_g * faces.dz)
    c = bnd.cells
    bmt = mobs.bnd_mob_w + mobs.bnd_mob_n
    with np.errstate(invalid="ignore", divide="ignore"):
        bfrac = np.where(bmt > 0.0, mobs.bnd_mob_n / bmt, 0.0)
        blam = np.where(bmt > 0.0, mobs.bnd_mob_n * mobs.bnd_mob_w / bmt, 0.0)
    bnd_n = (bfrac * bnd_vt
             + bnd.trans * blam * ((pc[c] - bnd.pc_out) - drho_g * bnd.dz))
    return f_n, bnd_n, lam
