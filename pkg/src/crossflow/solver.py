"""Outer fixed-point loop coupling the linearized flow and transport solves.

Each outer iteration solves the flow system with the convection field frozen
at the previous velocity and the osmotic membrane load frozen at the previous
concentration, then the transport system driven by the new velocity, then
relaxes both.  Linear systems go through sparse LU with partial pivoting.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import (
    SparseSystem,
    Triplets,
    assemble_body_force,
    assemble_membrane_coupling,
    assemble_membrane_drive,
    assemble_osmotic_load,
    assemble_oseen,
    assemble_stokes,
    assemble_transport,
    expand_solution,
    membrane_batch,
    reduce_triplets,
)
from .mesh import Mesh
from .params import NitscheParams, PhysicalParams
from .spaces import DofMap, FemSpaces, build_dofmap, parabolic_inlet


class LinearSolveError(RuntimeError):
    pass


class NonConvergenceError(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class SolverControl:
    tol_rel: float = 1e-8
    max_outer: int = 100
    relaxation: float = 1.0
    supg: bool = True
    linear_solver: str = "direct_lu"

    def __post_init__(self):
        if self.tol_rel <= 0:
            raise ValueError("tol_rel must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")
        if self.linear_solver != "direct_lu":
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


@dataclass
class SolutionFields:
    velocity: np.ndarray  # (n_p2, 2) [m/s]
    pressure: np.ndarray  # (n_vertices,) gauge [Pa]
    theta: np.ndarray  # (n_vertices,) [mol/m^3]


@dataclass
class ConvergenceTrace:
    u_increments: list = field(default_factory=list)
    theta_increments: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def solve_linear(system: SparseSystem) -> np.ndarray:
    """Direct sparse LU solve with a residual contract of
    ||Ax - b|| <= 1e-10 (||A|| ||x|| + ||b||)."""
    n = system.ndof
    if n == 0:
        return np.zeros(0)
    csr = system.matrix.tocsr()
    row_nnz = np.diff(csr.indptr)
    if np.any(row_nnz == 0):
        row = int(np.nonzero(row_nnz == 0)[0][0])
        raise LinearSolveError(f"structurally zero pivot row {row}")
    col_nnz = np.diff(csr.tocsc().indptr)
    if np.any(col_nnz == 0):
        col = int(np.nonzero(col_nnz == 0)[0][0])
        raise LinearSolveError(f"structurally zero pivot column {col}")
    try:
        lu = spla.splu(csr.tocsc(), permc_spec="COLAMD")
        x = lu.solve(system.rhs)
    except RuntimeError as exc:
        raise LinearSolveError(f"sparse LU factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise LinearSolveError("linear solve produced non-finite values")
    normA = np.abs(csr).sum(axis=1).max()
    res = np.linalg.norm(csr @ x - system.rhs)
    bound = 1e-10 * (
        float(normA) * np.linalg.norm(x) + np.linalg.norm(system.rhs)
    )
    if res > max(bound, 1e-300):
        raise LinearSolveError(
            f"direct solve residual {res:.3e} exceeds contract {bound:.3e}"
        )
    return x


class _FlowProblem:
    """Assembled constant parts of one boundary-condition variant."""

    def __init__(
        self,
        mesh: Mesh,
        spaces: FemSpaces,
        params: PhysicalParams,
        nitsche: NitscheParams,
        *,
        membrane: str = "darcy",
        fixed_flux=None,
        inlet_velocity=None,
        dirichlet_velocity=None,
        dirichlet_theta=None,
        body_force=None,
    ):
        if membrane not in ("darcy", "fixed_flux", "impermeable"):
            raise ValueError(f"unknown membrane mode {membrane!r}")
        if membrane == "fixed_flux" and fixed_flux is None:
            raise ValueError("fixed_flux mode requires a flux value")
        self.mesh = mesh
        self.params = params
        self.nitsche = nitsche
        self.membrane = membrane
        self.manufactured = dirichlet_velocity is not None

        d_chan = float(mesh.vertices[:, 1].max())
        if inlet_velocity is None and not self.manufactured:
            inlet_velocity = parabolic_inlet(params.u0, d_chan)
        self.dm = build_dofmap(
            mesh,
            spaces,
            inlet_velocity=inlet_velocity,
            theta_inlet=params.theta0,
            membrane_normal="strong_zero" if membrane == "impermeable" else "nitsche",
            dirichlet_velocity=dirichlet_velocity,
            dirichlet_theta=dirichlet_theta,
            pin_pressure=self.manufactured,
        )
        dm = self.dm
        self.nitsche_active = dm.membrane_weak and membrane != "impermeable"
        self.batch = membrane_batch(mesh, dm) if self.nitsche_active else None

        const = [assemble_stokes(mesh, dm, params)]
        if self.nitsche_active:
            const.append(
                assemble_membrane_coupling(mesh, dm, params, nitsche, batch=self.batch)
            )
        self.const = Triplets.concat(const)

        rhs = np.zeros(dm.n_flow)
        if self.nitsche_active:
            drive = params.dP / params.I0 if membrane == "darcy" else fixed_flux
            rhs += assemble_membrane_drive(
                mesh, dm, params, nitsche, batch=self.batch, drive=drive
            )
        if body_force is not None:
            rhs += assemble_body_force(mesh, dm, body_force)
        self.base_rhs = rhs

        mask, vals = dm.flow_dirichlet, dm.flow_values
        trip_red, corr, self.n_free = reduce_triplets(self.const, None, mask, vals)
        self.A_const = trip_red.matrix(self.n_free)
        self.const_corr = corr
        self.free = np.nonzero(~mask)[0]

    def flow_rhs(self, theta):
        b = self.base_rhs.copy()
        if (
            self.membrane == "darcy"
            and self.nitsche_active
            and self.params.kappa != 0.0
            and theta is not None
        ):
            b -= assemble_osmotic_load(
                self.mesh, self.dm, self.params, self.nitsche, theta, batch=self.batch
            )
        return b

    def solve_flow(self, wvel, theta):
        dm = self.dm
        mask, vals = dm.flow_dirichlet, dm.flow_values
        b_full = self.flow_rhs(theta)
        A = self.A_const
        corr = self.const_corr
        if wvel is not None:
            trip_o, corr_o, _ = reduce_triplets(
                assemble_oseen(self.mesh, dm, self.params, wvel), None, mask, vals
            )
            A = A + trip_o.matrix(self.n_free)
            corr = corr + corr_o
        b = b_full[self.free] + corr
        x = solve_linear(SparseSystem(A, b))
        full = expand_solution(x, mask, vals)
        n2 = dm.n_p2
        vel = np.column_stack([full[:n2], full[n2 : 2 * n2]])
        pres = full[2 * n2 :]
        return vel, pres

    def solve_theta(self, vel, control, source=None):
        dm = self.dm
        trip, rhs = assemble_transport(
            self.mesh, dm, self.params, vel, supg=control.supg, source=source
        )
        mask, vals = dm.theta_dirichlet, dm.theta_values
        trip_red, b, n_free = reduce_triplets(trip, rhs, mask, vals)
        x = solve_linear(SparseSystem(trip_red.matrix(n_free), b))
        return expand_solution(x, mask, vals)

    def normalize_pressure(self, pres):
        """Shift to a zero area-weighted mean (pinned-pressure variants)."""
        mesh = self.mesh
        mean = (mesh.areas[:, None] / 3.0 * pres[mesh.cells]).sum() / mesh.areas.sum()
        return pres - mean


def _rel_increment(new, old):
    denom = np.linalg.norm(new)
    diff = np.linalg.norm(new - old)
    if denom == 0.0:
        return 0.0 if diff == 0.0 else np.inf
    return diff / denom


def picard_solve(
    mesh: Mesh,
    spaces: FemSpaces,
    params: PhysicalParams,
    nitsche: NitscheParams,
    control: SolverControl,
    *,
    membrane: str = "darcy",
    fixed_flux=None,
    inlet_velocity=None,
    dirichlet_velocity=None,
    dirichlet_theta=None,
    body_force=None,
    transport_source=None,
    solve_transport: bool = True,
):
    """Fixed-point solve of the coupled system.

    Returns (SolutionFields, ConvergenceTrace); raises NonConvergenceError
    (carrying the trace) if the increment tolerance is not reached within
    ``control.max_outer`` iterations.
    """
    prob = _FlowProblem(
        mesh,
        spaces,
        params,
        nitsche,
        membrane=membrane,
        fixed_flux=fixed_flux,
        inlet_velocity=inlet_velocity,
        dirichlet_velocity=dirichlet_velocity,
        dirichlet_theta=dirichlet_theta,
        body_force=body_force,
    )
    dm = prob.dm
    theta = np.full(dm.n_theta, params.theta0)
    theta[dm.theta_dirichlet] = dm.theta_values[dm.theta_dirichlet]

    vel, pres = prob.solve_flow(None, theta)  # Stokes initial guess
    if solve_transport:
        theta = prob.solve_theta(vel, control, source=transport_source)

    trace = ConvergenceTrace()
    omega = control.relaxation
    for k in range(1, control.max_outer + 1):
        vel_new, pres_new = prob.solve_flow(vel, theta)
        if solve_transport:
            theta_raw = prob.solve_theta(vel_new, control, source=transport_source)
        vel_new = omega * vel_new + (1.0 - omega) * vel
        pres_new = omega * pres_new + (1.0 - omega) * pres
        if solve_transport:
            theta_new = omega * theta_raw + (1.0 - omega) * theta
        else:
            theta_new = theta

        du = _rel_increment(vel_new, vel)
        dth = _rel_increment(theta_new, theta) if solve_transport else 0.0
        trace.u_increments.append(float(du))
        trace.theta_increments.append(float(dth))
        trace.iterations = k
        vel, pres, theta = vel_new, pres_new, theta_new
        if max(du, dth) < control.tol_rel:
            trace.converged = True
            break
    if not trace.converged:
        raise NonConvergenceError(
            f"fixed-point loop did not reach tol_rel={control.tol_rel} within "
            f"{control.max_outer} iterations (last increments: "
            f"u {trace.u_increments[-1]:.3e}, theta {trace.theta_increments[-1]:.3e})",
            trace,
        )
    if prob.manufactured:
        pres = prob.normalize_pressure(pres)
    fields = SolutionFields(velocity=vel, pressure=pres, theta=theta)
    return fields, trace


@dataclass
class ResidualReport:
    flow_rel: float
    transport_rel: float


def _relative_residual(A, x, b, rows):
    r = (A @ x - b)[rows]
    rn = np.linalg.norm(r)
    if rn == 0.0:
        return 0.0
    # Scale by the term magnitudes before cancellation, not the residual.
    scale = np.linalg.norm((abs(A) @ np.abs(x))[rows]) + np.linalg.norm(b[rows])
    return float(rn / max(scale, 1e-300))


def compute_residuals(
    mesh,
    spaces,
    params,
    nitsche,
    control,
    fields: SolutionFields,
    *,
    membrane: str = "darcy",
    fixed_flux=None,
    inlet_velocity=None,
    transport_source=None,
    solve_transport: bool = True,
) -> ResidualReport:
    """Nonlinear residuals of both equations at the given state."""
    prob = _FlowProblem(
        mesh, spaces, params, nitsche, membrane=membrane, fixed_flux=fixed_flux,
        inlet_velocity=inlet_velocity,
    )
    dm = prob.dm
    x = np.concatenate([fields.velocity[:, 0], fields.velocity[:, 1], fields.pressure])
    trip = Triplets.concat(
        [prob.const, assemble_oseen(mesh, dm, params, fields.velocity)]
    )
    A = trip.matrix(dm.n_flow)
    b = prob.flow_rhs(fields.theta)
    flow_rel = _relative_residual(A, x, b, np.nonzero(~dm.flow_dirichlet)[0])

    transport_rel = 0.0
    if solve_transport:
        tripT, rhsT = assemble_transport(
            mesh, dm, params, fields.velocity, supg=control.supg,
            source=transport_source,
        )
        AT = tripT.matrix(dm.n_theta)
        transport_rel = _relative_residual(
            AT, fields.theta, rhsT, np.nonzero(~dm.theta_dirichlet)[0]
        )
    return ResidualReport(flow_rel=flow_rel, transport_rel=transport_rel)


def divergence_residual(
    mesh,
    spaces,
    params,
    nitsche,
    fields: SolutionFields,
    *,
    membrane: str = "darcy",
    fixed_flux=None,
) -> float:
    """Max-abs residual of the mass-conservation rows of the flow system at
    the converged state (the discrete divergence-free statement)."""
    prob = _FlowProblem(
        mesh, spaces, params, nitsche, membrane=membrane, fixed_flux=fixed_flux
    )
    dm = prob.dm
    x = np.concatenate([fields.velocity[:, 0], fields.velocity[:, 1], fields.pressure])
    trip = Triplets.concat(
        [prob.const, assemble_oseen(mesh, dm, params, fields.velocity)]
    )
    A = trip.matrix(dm.n_flow)
    b = prob.flow_rhs(fields.theta)
    rows = np.arange(2 * dm.n_p2, dm.n_flow)
    rows = rows[~dm.flow_dirichlet[rows]]
    return float(np.abs((A @ x - b)[rows]).max())
