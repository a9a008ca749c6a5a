"""Pressure solve and Darcy flux checks.

Oracles: hand-solved two-cell balances, a dense-factorization solve for
the sparse methods, and the hydrostatic no-flow invariant that anchors
the equilibrium behaviour of the whole scheme.
"""

import numpy as np
import pytest
import scipy.sparse as sp

from lensflow import _core as kernels
from lensflow.constitutive import MaterialProperties
from lensflow.fields import CellParams, evaluate_fields
from lensflow.grid import (BoxRegion, FaceTable, assign_materials, build_grid,
                           face_transmissibilities)
from lensflow.interface import face_thresholds
from lensflow.pressure import (PressureSystem, SingularSystemError,
                               assemble_pressure_system, empty_boundary,
                               face_upwind_mobilities, hydrostatic_boundary,
                               phase_darcy_flux, solve_pressure)

SAND = MaterialProperties(name="sand", permeability=1.5e-10, porosity=0.3,
                          s_wr=0.098, s_nr=0.01, p_entry=1323.0,
                          pore_size_index=3.86)
CLAY = MaterialProperties(name="clay", permeability=5.0e-14, porosity=0.2,
                          s_wr=0.19, s_nr=0.008, p_entry=4500.0,
                          pore_size_index=3.51)
MU_W = 1.0e-3
MU_N = 0.9e-3
G = 9.81
RWG = 1000.0 * G
RNG_G = 1630.0 * G


def setup(grid, mmap, materials, s_n, sides=(), rho_w_g=RWG,
          surface_pressure=0.0):
    faces = face_transmissibilities(grid, mmap, materials)
    sstar_lr, sstar_rl, _ = face_thresholds(faces, materials)
    params = CellParams.from_map(mmap, materials)
    state = evaluate_fields(np.asarray(s_n, dtype=float), params,
                            1.0 / MU_W, 1.0 / MU_N)
    if sides:
        bnd = hydrostatic_boundary(grid, mmap, materials, sides, rho_w_g,
                                   surface_pressure)
    else:
        bnd = empty_boundary()
    return faces, sstar_lr, sstar_rl, params, state, bnd


def hydrostatic_pressure(grid, rho_w_g=RWG):
    z = grid.cell_coordinate(grid.gravity_axis)
    return rho_w_g * (grid.top - z)


def test_single_cell_fixed_boundary_pressure():
    # no gravity, no source: the cell equilibrates to the boundary value
    grid = build_grid((1.0,), (1,))
    mmap = assign_materials(grid, [SAND], 0, [])
    faces, sl, sr, params, st, bnd = setup(
        grid, mmap, [SAND], [0.0], sides=((0, 1),), rho_w_g=0.0,
        surface_pressure=2000.0)
    p0 = np.zeros(1)
    mobs = face_upwind_mobilities(p0, st.se, st.pc, st.lam_w, st.lam_n,
                                  faces, sl, sr, bnd, 0.0, 0.0, 1.0 / MU_W)
    system = assemble_pressure_system(p0, st.pc, mobs, faces, bnd,
                                      np.zeros(1), 1, 0.0, 0.0)
    p = solve_pressure(system, p0)
    assert p[0] == pytest.approx(2000.0, rel=1e-12)
    fx = phase_darcy_flux(p, st.pc, mobs, faces, bnd, 0.0, 0.0)
    assert abs(fx.bnd_w[0]) <= 1e-12 * bnd.trans[0] * 1000.0 * 2000.0
    assert fx.bnd_n[0] == 0.0


def test_two_cell_injection_hand_oracle():
    # horizontal (gravity off) column, inject in cell 0, fixed far end:
    # p1 = q/(T_bc*lam), p0 = p1 + q/(T*lam), solved by hand from the
    # 2x2 balance.
    grid = build_grid((0.2,), (2,))
    mmap = assign_materials(grid, [SAND], 0, [])
    faces, sl, sr, params, st, bnd = setup(
        grid, mmap, [SAND], [0.0, 0.0], sides=((0, 1),), rho_w_g=0.0)
    q = 1.0e-6
    lam = 1.0 / MU_W
    t_int = 1.5e-10 / 0.1
    t_bc = 1.5e-10 / 0.05
    p0 = np.zeros(2)
    mobs = face_upwind_mobilities(p0, st.se, st.pc, st.lam_w, st.lam_n,
                                  faces, sl, sr, bnd, 0.0, 0.0, lam)
    system = assemble_pressure_system(p0, st.pc, mobs, faces, bnd,
                                      np.array([q, 0.0]), 2, 0.0, 0.0)
    p = solve_pressure(system, p0)
    p1 = q / (t_bc * lam)
    assert p[1] == pytest.approx(p1, rel=1e-10)
    assert p[0] == pytest.approx(p1 + q / (t_int * lam), rel=1e-10)
    fx = phase_darcy_flux(p, st.pc, mobs, faces, bnd, 0.0, 0.0)
    assert fx.f_w[0] == pytest.approx(q, rel=1e-10)
    assert fx.bnd_w[0] == pytest.approx(q, rel=1e-10)  # outward
    assert np.all(fx.f_n == 0.0)


def test_prescribed_gradient_flux_magnitude():
    # dp = 1000 Pa across one face with T = 1e-11 and lam_w = 1000
    # carries exactly 1e-5 m^3/s
    left = np.array([0], dtype=np.int64)
    right = np.array([1], dtype=np.int64)
    faces = FaceTable(left=left, right=right, trans=np.array([1.0e-11]),
                      dz=np.zeros(1), axis=np.zeros(1, dtype=np.int64),
                      mat_left=np.zeros(1, dtype=np.int32),
                      mat_right=np.zeros(1, dtype=np.int32),
                      heterogeneous=np.zeros(1, dtype=bool))
    p = np.array([1000.0, 0.0])
    pc = np.zeros(2)
    lam_w = np.full(2, 1000.0)
    lam_n = np.zeros(2)
    se = np.ones(2)
    no_bar = np.full(1, 2.0)
    mobs = face_upwind_mobilities(p, se, pc, lam_w, lam_n, faces, no_bar,
                                  no_bar, empty_boundary(), 0.0, 0.0, 1000.0)
    fx = phase_darcy_flux(p, pc, mobs, faces, empty_boundary(), 0.0, 0.0)
    assert fx.f_w[0] == pytest.approx(1.0e-5, rel=1e-14)


def test_hydrostatic_column_from_cold_start():
    # open top, immobile trace of DNAPL: p_w = rho_w g depth, i.e.
    # 98100 Pa per 10 m of water column
    grid = build_grid((10.0,), (100,))
    mmap = assign_materials(grid, [SAND], 0, [])
    s_n = np.full(100, 0.001)
    faces, sl, sr, params, st, bnd = setup(grid, mmap, [SAND], s_n,
                                           sides=((0, 1),))
    p0 = np.zeros(100)
    mobs = face_upwind_mobilities(p0, st.se, st.pc, st.lam_w, st.lam_n,
                                  faces, sl, sr, bnd, RWG, RNG_G, 1.0 / MU_W)
    system = assemble_pressure_system(p0, st.pc, mobs, faces, bnd,
                                      np.zeros(100), 100, RWG, RNG_G)
    p = solve_pressure(system, p0)
    expected = hydrostatic_pressure(grid)
    assert np.allclose(p, expected, rtol=1e-10, atol=1e-6)
    # extrapolate the deepest cell to the domain bottom: full 10 m head
    p_bottom = p[0] + RWG * grid.spacing[0] / 2.0
    assert p_bottom == pytest.approx(98100.0, rel=1e-10)


def test_equilibrium_velocities_below_noise_floor():
    # hydrostatic start with a clay lens: the solve must not generate
    # flow, and the immobile DNAPL trace must carry exactly zero flux
    grid = build_grid((10.0, 10.0), (50, 50))
    lens = BoxRegion(material=1, box=((3.5, 6.5), (5.5, 6.0)))
    mmap = assign_materials(grid, [SAND, CLAY], 0, [lens])
    s_n = np.full(grid.ncells, 0.001)
    sides = ((0, 0), (0, 1), (1, 1))
    faces, sl, sr, params, st, bnd = setup(grid, mmap, [SAND, CLAY], s_n,
                                           sides=sides)
    p_prev = hydrostatic_pressure(grid)
    mobs = face_upwind_mobilities(p_prev, st.se, st.pc, st.lam_w, st.lam_n,
                                  faces, sl, sr, bnd, RWG, RNG_G, 1.0 / MU_W)
    system = assemble_pressure_system(p_prev, st.pc, mobs, faces, bnd,
                                      np.zeros(grid.ncells), grid.ncells,
                                      RWG, RNG_G)
    p = solve_pressure(system, p_prev)
    assert np.max(np.abs(p - p_prev)) < 1e-6  # Pa
    fx = phase_darcy_flux(p, st.pc, mobs, faces, bnd, RWG, RNG_G)
    areas = np.array([grid.face_area(a) for a in range(grid.ndim)])
    vel_w = np.abs(fx.f_w) / areas[faces.axis]
    assert np.max(vel_w) < 1e-12  # m/s
    assert np.all(fx.f_n == 0.0)
    assert np.all(fx.bnd_n == 0.0)


def chain_system(c_faces, cb0, b):
    # 1D chain with face conductances c_faces and a Dirichlet diagonal
    # cb0 on cell 0, assembled like the production path (stored zeros
    # for dead faces included)
    n = len(c_faces) + 1
    left = np.arange(n - 1)
    right = left + 1
    c = np.asarray(c_faces, dtype=float)
    rows = np.concatenate([left, right, left, right, [0]])
    cols = np.concatenate([left, right, right, left, [0]])
    vals = np.concatenate([c, c, -c, -c, [cb0]])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return PressureSystem(matrix=A, rhs=np.asarray(b, dtype=float),
                          dirichlet=True, anchors=np.array([0]),
                          zero_faces=True)


@pytest.mark.parametrize("method", ["direct", "cg"])
def test_sealed_region_is_grounded_and_keeps_its_fluxes(method):
    # cells 0-1-2 anchored through cell 0, face 2-3 dead, cells 3-4-5
    # sealed with a balanced source pair: q in at 3, q out at 5
    q = 2.5e-4
    system = chain_system([1.0, 2.0, 0.0, 0.5, 0.25], cb0=4.0,
                          b=[4.0 * 5.0, 0.0, 0.0, q, 0.0, -q])
    p_prev = np.array([0.0, 0.0, 0.0, 7.0, 7.0, 7.0])
    p = solve_pressure(system, p_prev, method=method, tol=1e-10)
    assert np.max(np.abs(p[:3] - 5.0)) < 1e-9  # anchored block
    assert p[3] == pytest.approx(7.0, abs=1e-9)  # grounded at p_prev
    assert p[3] - p[4] == pytest.approx(q / 0.5, rel=1e-9)
    assert p[4] - p[5] == pytest.approx(q / 0.25, rel=1e-9)


def test_sealed_region_with_net_source_raises():
    system = chain_system([1.0, 2.0, 0.0, 0.5, 0.25], cb0=4.0,
                          b=[4.0 * 5.0, 0.0, 0.0, 2.5e-4, 0.0, 0.0])
    with pytest.raises(SingularSystemError):
        solve_pressure(system, np.zeros(6))


def test_solver_methods_match_dense_oracle():
    rng = np.random.default_rng(7)
    n = 100
    main = rng.uniform(2.2, 3.0, n)
    off = rng.uniform(0.1, 1.0, n - 1)
    A = sp.diags([-off, main, -off], [-1, 0, 1], format="csr")
    b = rng.standard_normal(n)
    oracle = np.linalg.solve(A.toarray(), b)
    scale = np.max(np.abs(oracle))
    for method in ("direct", "dense", "cg"):
        p = solve_pressure(PressureSystem(matrix=A, rhs=b, dirichlet=True),
                           method=method, tol=1e-8)
        assert np.max(np.abs(p - oracle)) <= 1e-8 * scale, method
    with pytest.raises(ValueError):
        solve_pressure(PressureSystem(matrix=A, rhs=b, dirichlet=True),
                       method="multigrid")


def heterogeneous_problem(seed=3, q_center=0.0):
    grid = build_grid((4.0, 4.0), (8, 8))
    lens = BoxRegion(material=1, box=((1.0, 3.0), (1.5, 2.5)))
    mmap = assign_materials(grid, [SAND, CLAY], 0, [lens])
    rng = np.random.default_rng(seed)
    s_n = rng.uniform(0.0, 0.5, grid.ncells)
    sides = ((0, 0), (0, 1))
    faces, sl, sr, params, st, bnd = setup(grid, mmap, [SAND, CLAY], s_n,
                                           sides=sides)
    q_vol = np.zeros(grid.ncells)
    q_vol[grid.ncells // 2 + 4] = q_center
    p_prev = hydrostatic_pressure(grid)
    mobs = face_upwind_mobilities(p_prev, st.se, st.pc, st.lam_w, st.lam_n,
                                  faces, sl, sr, bnd, RWG, RNG_G, 1.0 / MU_W)
    system = assemble_pressure_system(p_prev, st.pc, mobs, faces, bnd,
                                      q_vol, grid.ncells, RWG, RNG_G)
    return grid, faces, st, bnd, mobs, q_vol, p_prev, system


def test_matrix_symmetric_with_zero_interior_row_sums():
    grid, faces, st, bnd, mobs, q_vol, p_prev, system = heterogeneous_problem()
    A = system.matrix
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()
    row_sums = np.array(A.sum(axis=1)).ravel()
    interior = np.ones(grid.ncells, dtype=bool)
    interior[bnd.cells] = False
    assert np.max(np.abs(row_sums[interior])) <= 1e-12 * A.diagonal().max()
    assert np.all(row_sums[bnd.cells] > 0.0)


def test_discrete_conservation_matches_solver_tolerance():
    q = 2.3006134969325153e-7
    grid, faces, st, bnd, mobs, q_vol, p_prev, system = \
        heterogeneous_problem(q_center=q)
    p = solve_pressure(system, p_prev, tol=1e-12)
    fx = phase_darcy_flux(p, st.pc, mobs, faces, bnd, RWG, RNG_G)
    total = fx.f_w + fx.f_n
    residual = q_vol + kernels.divergence(total, faces.left, faces.right,
                                          grid.ncells)
    np.add.at(residual, bnd.cells, -(fx.bnd_w + fx.bnd_n))
    scale = max(np.max(np.abs(total)), q)
    assert np.max(np.abs(residual)) <= 1e-9 * scale


def test_entry_gate_blocks_then_admits_nonwetting_flux():
    # sand over clay; DNAPL pooled in the sand above the contact. Below
    # the entry threshold the downward flux is exactly zero; past it the
    # face opens and the flux turns negative (downward).
    grid = build_grid((0.4,), (4,))
    mmap = assign_materials(grid, [SAND, CLAY], 0,
                            [BoxRegion(material=1, box=((0.0, 0.2),))])
    idx_face = 1  # clay cell 1 | sand cell 2
    p_prev = hydrostatic_pressure(grid)

    def nonwetting_flux(se_sand):
        s_n = np.zeros(4)
        s_n[2:] = 1.0 - SAND.s_wr - SAND.mobile_range * se_sand
        faces, sl, sr, params, st, bnd = setup(grid, mmap, [SAND, CLAY], s_n)
        assert faces.left[idx_face] == 1 and faces.right[idx_face] == 2
        assert sl[idx_face] == 2.0  # fine-to-coarse: no barrier
        assert sr[idx_face] == pytest.approx(0.0088678981275226162, rel=1e-12)
        mobs = face_upwind_mobilities(p_prev, st.se, st.pc, st.lam_w,
                                      st.lam_n, faces, sl, sr,
                                      empty_boundary(), RWG, RNG_G,
                                      1.0 / MU_W)
        fx = phase_darcy_flux(p_prev, st.pc, mobs, faces, empty_boundary(),
                              RWG, RNG_G)
        return fx.f_n[idx_face]

    assert nonwetting_flux(0.012) == 0.0  # held back by the entry pressure
    assert nonwetting_flux(0.005) < 0.0  # breakthrough, draining downward


def test_closed_column_gravity_segregation():
    # sealed column, DNAPL layered on top of water, capillarity off:
    # the compatible singular system is solvable and drives DNAPL down
    # against an equal wetting counterflow
    grid = build_grid((1.0,), (10,))
    mmap = assign_materials(grid, [SAND], 0, [])
    z = grid.cell_coordinate(0)
    s_n = np.where(z > 0.5, 0.4, 0.0)
    faces, sl, sr, params, st, bnd = setup(grid, mmap, [SAND], s_n)
    pc = np.zeros(grid.ncells)
    p_prev = hydrostatic_pressure(grid)
    mobs = face_upwind_mobilities(p_prev, st.se, pc, st.lam_w, st.lam_n,
                                  faces, sl, sr, bnd, RWG, RNG_G, 1.0 / MU_W)
    system = assemble_pressure_system(p_prev, pc, mobs, faces, bnd,
                                      np.zeros(10), 10, RWG, RNG_G)
    p = solve_pressure(system, p_prev)
    fx = phase_darcy_flux(p, pc, mobs, faces, bnd, RWG, RNG_G)
    assert fx.f_n[4] < 0.0  # interface face: DNAPL sinks
    assert fx.f_w[4] > 0.0  # water rises through it
    total = np.abs(fx.f_w + fx.f_n)
    assert np.max(total) <= 1e-10 * np.max(np.abs(fx.f_n))

    system2 = assemble_pressure_system(
        p_prev, pc, mobs, faces, bnd,
        np.array([1e-8] + [0.0] * 9), 10, RWG, RNG_G)
    with pytest.raises(SingularSystemError):
        solve_pressure(system2, p_prev)


def test_flux_antisymmetry_under_face_orientation_flip():
    grid, faces, st, bnd, mobs, q_vol, p_prev, system = heterogeneous_problem()
    rng = np.random.default_rng(11)
    p = p_prev + rng.normal(0.0, 500.0, grid.ncells)
    sl, sr, _ = face_thresholds(faces, [SAND, CLAY])
    flipped = FaceTable(left=faces.right, right=faces.left,
                        trans=faces.trans, dz=-faces.dz, axis=faces.axis,
                        mat_left=faces.mat_right, mat_right=faces.mat_left,
                        heterogeneous=faces.heterogeneous)
    args = (p, st.se, st.pc, st.lam_w, st.lam_n)
    m1 = face_upwind_mobilities(*args, faces, sl, sr, empty_boundary(),
                                RWG, RNG_G, 1.0 / MU_W)
    m2 = face_upwind_mobilities(*args, flipped, sr, sl, empty_boundary(),
                                RWG, RNG_G, 1.0 / MU_W)
    f1 = phase_darcy_flux(p, st.pc, m1, faces, empty_boundary(), RWG, RNG_G)
    f2 = phase_darcy_flux(p, st.pc, m2, flipped, empty_boundary(), RWG, RNG_G)
    assert np.array_equal(f1.f_w, -f2.f_w)
    assert np.array_equal(f1.f_n, -f2.f_n)
