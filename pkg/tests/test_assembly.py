import numpy as np
import pytest

from crossflow.assembly import (
    SparseSystem,
    apply_dirichlet,
    assemble_membrane_drive,
    assemble_osmotic_load,
    assemble_oseen,
    assemble_stokes,
    assemble_transport,
    reduce_triplets,
    supg_tau,
)
from crossflow.geometry import ChannelGeometry, GradingSpec
from crossflow.mesh import build_rectangle_mesh
from crossflow.params import NitscheParams, PhysicalParams
from crossflow.spaces import FemSpaces, build_dofmap

UNIT = PhysicalParams(
    rho0=1.0, mu0=1.0, D0=1.0, kappa=0.0, I0=1.0, dP=1.0, u0=1.0, theta0=0.0
)


def unit_square(n=4):
    geom = ChannelGeometry(L=1.0, d=1.0, W=1.0)
    mesh = build_rectangle_mesh(geom, GradingSpec(n_y=n))
    dm = build_dofmap(mesh, FemSpaces())
    return mesh, dm


def interp_velocity(dm, fx, fy):
    xy = dm.node_xy
    return np.column_stack([fx(xy[:, 0], xy[:, 1]), fy(xy[:, 0], xy[:, 1])])


def flow_vector(dm, vel, pres):
    return np.concatenate([vel[:, 0], vel[:, 1], pres])


class TestStokes:
    def test_gradient_of_constant_vanishes(self):
        mesh, dm = unit_square()
        A = assemble_stokes(mesh, dm, UNIT).matrix(dm.n_flow)
        u = flow_vector(
            dm, interp_velocity(dm, lambda x, y: 2.3 + 0 * x, lambda x, y: -1.1 + 0 * x),
            np.zeros(mesh.n_vertices),
        )
        # Rows of velocity test functions see only the viscous + pressure
        # blocks; with p = 0 and constant u everything vanishes.
        r = A @ u
        assert np.abs(r[: 2 * dm.n_p2]).max() < 1e-14

    def test_shear_field_unit_energy(self):
        mesh, dm = unit_square()
        A = assemble_stokes(mesh, dm, UNIT).matrix(dm.n_flow)
        u = flow_vector(
            dm, interp_velocity(dm, lambda x, y: y, lambda x, y: 0 * x),
            np.zeros(mesh.n_vertices),
        )
        assert u @ (A @ u) == pytest.approx(1.0, rel=1e-12)

    def test_divergence_pairing(self):
        mesh, dm = unit_square()
        A = assemble_stokes(mesh, dm, UNIT).matrix(dm.n_flow)
        v = flow_vector(
            dm, interp_velocity(dm, lambda x, y: x, lambda x, y: 0 * x),
            np.zeros(mesh.n_vertices),
        )
        q = flow_vector(
            dm, np.zeros((dm.n_p2, 2)), np.ones(mesh.n_vertices)
        )
        # b(v, q) = -(q, div v) = -1 on the unit square.
        assert q @ (A @ v) == pytest.approx(-1.0, rel=1e-12)

    def test_viscosity_scaling(self):
        mesh, dm = unit_square(3)
        A1 = assemble_stokes(mesh, dm, UNIT).matrix(dm.n_flow)
        mu = PhysicalParams(
            rho0=1.0, mu0=3.5, D0=1.0, kappa=0.0, I0=1.0, dP=1.0, u0=1.0, theta0=0.0
        )
        A2 = assemble_stokes(mesh, dm, mu).matrix(dm.n_flow)
        vel_block = slice(0, 2 * dm.n_p2)
        d = (A2[vel_block, vel_block] - 3.5 * A1[vel_block, vel_block]).toarray()
        assert np.abs(d).max() < 1e-12


class TestOseen:
    def test_zero_transport_field(self):
        mesh, dm = unit_square()
        C = assemble_oseen(mesh, dm, UNIT, np.zeros((dm.n_p2, 2)))
        assert np.abs(C.vals).max() == 0.0

    def test_unit_convection_integral(self):
        mesh, dm = unit_square()
        w = interp_velocity(dm, lambda x, y: 1.0 + 0 * x, lambda x, y: 0 * x)
        C = assemble_oseen(mesh, dm, UNIT, w).matrix(dm.n_flow)
        u = flow_vector(
            dm, interp_velocity(dm, lambda x, y: x, lambda x, y: 0 * x),
            np.zeros(mesh.n_vertices),
        )
        v = flow_vector(
            dm, interp_velocity(dm, lambda x, y: 1.0 + 0 * x, lambda x, y: 0 * x),
            np.zeros(mesh.n_vertices),
        )
        assert v @ (C @ u) == pytest.approx(1.0, rel=1e-12)

    def test_density_scaling(self):
        mesh, dm = unit_square(3)
        w = interp_velocity(dm, lambda x, y: y, lambda x, y: x)
        C1 = assemble_oseen(mesh, dm, UNIT, w)
        rho = PhysicalParams(
            rho0=7.0, mu0=1.0, D0=1.0, kappa=0.0, I0=1.0, dP=1.0, u0=1.0, theta0=0.0
        )
        C7 = assemble_oseen(mesh, dm, rho, w)
        assert np.allclose(C7.vals, 7.0 * C1.vals, rtol=1e-13)


class TestMembraneLoads:
    def test_zero_drive(self):
        mesh, dm = unit_square()
        F = assemble_membrane_drive(mesh, dm, UNIT, NitscheParams(1.0), drive=0.0)
        assert np.abs(F).max() == 0.0

    def test_drive_scales_linearly(self):
        mesh, dm = unit_square()
        ni = NitscheParams(1.0)
        p1 = PhysicalParams.seawater(dP=4053000.0, theta0=0.0)
        p2 = PhysicalParams.seawater(dP=2 * 4053000.0, theta0=0.0)
        F1 = assemble_membrane_drive(mesh, dm, p1, ni)
        F2 = assemble_membrane_drive(mesh, dm, p2, ni)
        assert np.allclose(F2, 2.0 * F1, rtol=1e-13)

    def test_drive_velocity_is_pressure_over_resistance(self):
        p = PhysicalParams.seawater(theta0=0.0)
        assert p.dP / p.I0 == pytest.approx(4.8193e-5, rel=1e-4)

    def test_zero_concentration_load(self):
        mesh, dm = unit_square()
        B = assemble_osmotic_load(
            mesh, dm, PhysicalParams.seawater(), NitscheParams(1.0),
            np.zeros(mesh.n_vertices),
        )
        assert np.abs(B).max() == 0.0

    def test_uniform_concentration_equals_constant_drive(self):
        # kappa*theta0/I0 acts exactly like a constant drive of 3.5352e-5 m/s.
        mesh, dm = unit_square()
        params = PhysicalParams.seawater()
        ni = NitscheParams(1.0)
        B = assemble_osmotic_load(mesh, dm, params, ni, np.full(mesh.n_vertices, 600.0))
        g = params.kappa * 600.0 / params.I0
        assert g == pytest.approx(3.5352e-5, rel=1e-4)
        F = assemble_membrane_drive(mesh, dm, params, ni, drive=g)
        assert np.allclose(B, F, rtol=1e-12, atol=1e-300)


class TestTransport:
    def test_constant_theta_in_divergence_free_tangential_flow(self):
        # u has u.n = 0 on every boundary; theta constant kills both the
        # convection and the boundary term.
        mesh, dm = unit_square(5)
        vel = interp_velocity(
            dm,
            lambda x, y: np.sin(np.pi * x) * y * (1 - y),
            lambda x, y: 0.0 * x,
        )
        trip, rhs = assemble_transport(mesh, dm, UNIT, vel)
        T = trip.matrix(dm.n_theta)
        r = T @ np.full(dm.n_theta, 4.2) - rhs
        # Diffusion of a constant vanishes identically; the convection and
        # boundary rows cancel to quadrature/roundoff.
        assert np.abs(r).max() < 1e-13

    def test_pure_diffusion_solution_is_constant(self):
        from crossflow.solver import solve_linear

        geom = ChannelGeometry.standard()
        mesh = build_rectangle_mesh(geom, GradingSpec(n_y=4))
        dm = build_dofmap(mesh, FemSpaces(), theta_inlet=600.0)
        trip, rhs = assemble_transport(
            mesh, dm, PhysicalParams.seawater(), np.zeros((dm.n_p2, 2))
        )
        red, b, n_free = reduce_triplets(trip, rhs, dm.theta_dirichlet, dm.theta_values)
        x = solve_linear(SparseSystem(red.matrix(n_free), b))
        assert np.abs(x - 600.0).max() < 1e-9

    def test_cell_peclet_motivates_stabilization(self):
        params = PhysicalParams.seawater()
        pe = params.u0 * 1e-5 / (2.0 * params.D0)
        assert pe == pytest.approx(430.0, rel=1e-3)

    def test_supg_tau_limits(self):
        # Convection-dominated: tau -> h/(2|u|); diffusion-dominated:
        # tau -> h^2/(12 D0).
        assert supg_tau(1.0, 1.0, 1e-6) == pytest.approx(0.5, rel=1e-4)
        assert supg_tau(1e-12, 0.1, 0.01) == pytest.approx(0.1**2 / (12 * 0.01), rel=1e-3)
        assert supg_tau(0.0, 0.1, 0.01) == pytest.approx(0.1**2 / (12 * 0.01), rel=1e-12)

    def test_supg_adds_positive_semidefinite_term(self):
        mesh, dm = unit_square(4)
        vel = interp_velocity(dm, lambda x, y: 1 + 0 * x, lambda x, y: 1 + 0 * x)
        t0, _ = assemble_transport(mesh, dm, UNIT, vel, supg=False)
        t1, _ = assemble_transport(mesh, dm, UNIT, vel, supg=True)
        S = (t1.matrix(dm.n_theta) - t0.matrix(dm.n_theta)).toarray()
        assert np.allclose(S, S.T, atol=1e-14)
        assert np.linalg.eigvalsh(S).min() > -1e-12


class TestDirichlet:
    def test_all_constrained_gives_empty_system(self):
        import scipy.sparse as sp

        A = SparseSystem(
            sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 3.0]])), np.array([3.0, 5.0])
        )
        red, free = apply_dirichlet(A, np.array([True, True]), np.array([1.0, 2.0]))
        assert red.ndof == 0
        assert free.size == 0

    def test_none_constrained_is_identity(self):
        import scipy.sparse as sp

        A = SparseSystem(
            sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 3.0]])), np.array([3.0, 5.0])
        )
        red, free = apply_dirichlet(A, np.array([False, False]), np.zeros(2))
        assert np.allclose(red.matrix.toarray(), [[2, 1], [1, 3]])
        assert np.allclose(red.rhs, [3, 5])

    def test_reduce_triplets_matches_apply_dirichlet(self):
        import scipy.sparse as sp

        from crossflow.assembly import Triplets

        rng = np.random.default_rng(7)
        n = 30
        dense = rng.standard_normal((n, n))
        rows, cols = np.nonzero(dense)
        trip = Triplets(rows, cols, dense[rows, cols])
        rhs = rng.standard_normal(n)
        mask = rng.random(n) < 0.3
        vals = np.where(mask, rng.standard_normal(n), 0.0)
        red1, b1, n_free = reduce_triplets(trip, rhs, mask, vals)
        sys2, free = apply_dirichlet(
            SparseSystem(sp.csr_matrix((trip.vals, (trip.rows, trip.cols)), shape=(n, n)), rhs),
            mask,
            vals,
        )
        assert np.allclose(red1.matrix(n_free).toarray(), sys2.matrix.toarray())
        assert np.allclose(b1, sys2.rhs)

    def test_poisson_patch_reproduces_linear_field(self):
        from crossflow.solver import solve_linear
        from crossflow.assembly import expand_solution

        geom = ChannelGeometry(L=1.0, d=1.0, W=1.0)
        mesh = build_rectangle_mesh(geom, GradingSpec(n_y=3))
        lin = lambda xy: 2.0 * xy[:, 0] - 3.0 * xy[:, 1] + 0.5
        dm = build_dofmap(mesh, FemSpaces(), dirichlet_theta=lin)
        trip, rhs = assemble_transport(mesh, dm, UNIT, np.zeros((dm.n_p2, 2)))
        red, b, n_free = reduce_triplets(trip, rhs, dm.theta_dirichlet, dm.theta_values)
        x = solve_linear(SparseSystem(red.matrix(n_free), b))
        full = expand_solution(x, dm.theta_dirichlet, dm.theta_values)
        assert np.abs(full - lin(mesh.vertices)).max() < 1e-10
