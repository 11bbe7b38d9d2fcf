"""Vectorized assembly of the coupled flow/transport variational forms.

Flow unknowns are (u, p) in the Taylor-Hood pair; the membrane permeability
law is imposed weakly: a symmetric consistency/penalty set of edge terms on
the membrane plus a matching right-hand side built from the pressure drive
dP/I0 and the osmotic retardation kappa*theta/I0.  The concentration system
is a P1 convection-diffusion operator with the membrane/wall boundary term
and optional streamline (SUPG) stabilization.

All volume terms use a 6-point degree-4 triangle rule, edge terms a 3-point
Gauss rule.  Assembly is cell-parallel in spirit: every routine returns
per-entity triplet arrays whose order is fixed by cell index, so summed
matrices are deterministic.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import BoundaryTag, Mesh
from .params import NitscheParams, PhysicalParams
from .quadrature import (
    EDGE_GAUSS3_POINTS,
    EDGE_GAUSS3_WEIGHTS,
    TRI_DEGREE4_POINTS,
    TRI_DEGREE4_WEIGHTS,
)
from .spaces import DofMap


@dataclass
class SparseSystem:
    """Assembled linear system in compressed-row form."""

    matrix: sp.csr_matrix
    rhs: np.ndarray

    def __post_init__(self):
        if self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError("system matrix must be square")
        if self.matrix.shape[0] != len(self.rhs):
            raise ValueError("matrix and right-hand side sizes differ")

    @property
    def ndof(self):
        return self.matrix.shape[0]


@dataclass
class Triplets:
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @classmethod
    def empty(cls):
        z = np.zeros(0)
        return cls(z.astype(np.int64), z.astype(np.int64), z)

    @classmethod
    def concat(cls, blocks):
        blocks = list(blocks)
        return cls(
            np.concatenate([b.rows for b in blocks]),
            np.concatenate([b.cols for b in blocks]),
            np.concatenate([b.vals for b in blocks]),
        )

    def matrix(self, n):
        return sp.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(n, n)
        ).tocsr()


def p2_shape(lam):
    """Quadratic basis values at barycentric points lam (..., 3).

    Local order: three vertex functions, then the midside function opposite
    each vertex."""
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    return np.stack(
        [
            l0 * (2.0 * l0 - 1.0),
            l1 * (2.0 * l1 - 1.0),
            l2 * (2.0 * l2 - 1.0),
            4.0 * l1 * l2,
            4.0 * l2 * l0,
            4.0 * l0 * l1,
        ],
        axis=-1,
    )


def p2_grad(lam, grad_lambda):
    """Physical gradients of the quadratic basis.

    lam: (..., Q, 3) barycentric points, grad_lambda: (..., 3, 2) per entity.
    Returns (..., Q, 6, 2).
    """
    gl = grad_lambda[..., None, :, :]  # (..., 1, 3, 2)
    out = np.empty(lam.shape[:-1] + (6, 2))
    for i in range(3):
        out[..., i, :] = (4.0 * lam[..., i, None] - 1.0) * gl[..., i, :]
    for k in range(3):
        k1, k2 = (k + 1) % 3, (k + 2) % 3
        out[..., 3 + k, :] = 4.0 * (
            lam[..., k1, None] * gl[..., k2, :] + lam[..., k2, None] * gl[..., k1, :]
        )
    return out


def _expand_block(row_dofs, col_dofs, vals):
    """Scatter per-entity dense blocks (E,R,S) to triplet arrays."""
    E, R = row_dofs.shape
    S = col_dofs.shape[1]
    rows = np.broadcast_to(row_dofs[:, :, None], (E, R, S)).ravel()
    cols = np.broadcast_to(col_dofs[:, None, :], (E, R, S)).ravel()
    return Triplets(rows, cols, vals.reshape(-1))


def _velocity_at(shape_vals, vel, dofs):
    """Velocity (..., Q, 2) at quadrature points from P2 coefficients."""
    return np.einsum("...qi,...ik->...qk", shape_vals, vel[dofs])


def assemble_stokes(mesh: Mesh, dm: DofMap, params: PhysicalParams) -> Triplets:
    """Viscous block plus both velocity-pressure coupling blocks."""
    lam = TRI_DEGREE4_POINTS
    w = TRI_DEGREE4_WEIGHTS
    G = p2_grad(np.broadcast_to(lam, (mesh.n_cells,) + lam.shape), mesh.grad_lambda)
    A = mesh.areas

    K = params.mu0 * np.einsum("q,cqik,cqjk->cij", w, G, G) * A[:, None, None]
    ux = dm.cell_p2
    uy = dm.n_p2 + dm.cell_p2
    pr = 2 * dm.n_p2 + mesh.cells

    blocks = [_expand_block(ux, ux, K), _expand_block(uy, uy, K)]

    # b(v, q) = -(q, div v): rows q, cols velocity; symmetric transposes too.
    for comp, vdofs in ((0, ux), (1, uy)):
        Bc = -np.einsum("q,qa,cqi->cai", w, lam, G[..., comp]) * A[:, None, None]
        blocks.append(_expand_block(pr, vdofs, Bc))
        blocks.append(_expand_block(vdofs, pr, np.swapaxes(Bc, 1, 2)))
    return Triplets.concat(blocks)


def assemble_oseen(
    mesh: Mesh, dm: DofMap, params: PhysicalParams, wvel: np.ndarray
) -> Triplets:
    """Convection block rho0 * (w . grad u, v) with frozen transport field w."""
    lam = TRI_DEGREE4_POINTS
    w = TRI_DEGREE4_WEIGHTS
    N = p2_shape(lam)
    G = p2_grad(np.broadcast_to(lam, (mesh.n_cells,) + lam.shape), mesh.grad_lambda)
    wq = _velocity_at(N, wvel, dm.cell_p2)
    C = (
        params.rho0
        * np.einsum("q,qi,cqk,cqjk->cij", w, N, wq, G)
        * mesh.areas[:, None, None]
    )
    ux = dm.cell_p2
    uy = dm.n_p2 + dm.cell_p2
    return Triplets.concat([_expand_block(ux, ux, C), _expand_block(uy, uy, C)])


class _EdgeBatch:
    """Per-edge quadrature data for a set of boundary tags."""

    def __init__(self, mesh: Mesh, dm: DofMap, tags):
        idx = np.nonzero(np.isin(mesh.boundary_tags, [int(t) for t in tags]))[0]
        self.index = idx
        self.count = len(idx)
        if self.count == 0:
            return
        cells = mesh.boundary_cells[idx]
        va = mesh.boundary_edges[idx, 0]
        vb = mesh.boundary_edges[idx, 1]
        cv = mesh.cells[cells]
        la = np.argmax(cv == va[:, None], axis=1)
        lb = np.argmax(cv == vb[:, None], axis=1)
        t = EDGE_GAUSS3_POINTS
        eye = np.eye(3)
        lam = (
            eye[la][:, None, :] * (1.0 - t)[None, :, None]
            + eye[lb][:, None, :] * t[None, :, None]
        )
        self.cells = cells
        self.va, self.vb = va, vb
        self.lam = lam
        self.shape = p2_shape(lam)
        self.grad = p2_grad(lam, mesh.grad_lambda[cells])
        self.normals = mesh.boundary_normals[idx]
        self.lengths = mesh.boundary_lengths[idx]
        self.p2_dofs = dm.cell_p2[cells]
        self.cell_verts = mesh.cells[cells]
        self.qweights = EDGE_GAUSS3_WEIGHTS

    def normal_trace(self):
        """(E, Q, 12) values of v.n for the velocity dofs of the edge's cell."""
        nx = self.normals[:, 0][:, None, None]
        ny = self.normals[:, 1][:, None, None]
        return np.concatenate([self.shape * nx, self.shape * ny], axis=2)

    def flux_trace(self, mu0, n_p2):
        """(E, Q, 15) values of mu0*n.(grad v)n - q, and the matching dofs.

        Velocity dofs first (x then y components), pressure dofs last."""
        gn = np.einsum("eqik,ek->eqi", self.grad, self.normals)
        nx = self.normals[:, 0][:, None, None]
        ny = self.normals[:, 1][:, None, None]
        flux = np.concatenate(
            [mu0 * gn * nx, mu0 * gn * ny, -self.lam], axis=2
        )
        dofs = np.concatenate(
            [self.p2_dofs, n_p2 + self.p2_dofs, 2 * n_p2 + self.cell_verts], axis=1
        )
        return flux, dofs

    def velocity_dofs(self, n_p2):
        return np.concatenate([self.p2_dofs, n_p2 + self.p2_dofs], axis=1)


def membrane_batch(mesh: Mesh, dm: DofMap) -> _EdgeBatch:
    return _EdgeBatch(mesh, dm, [BoundaryTag.MEMBRANE])


def assemble_membrane_coupling(
    mesh: Mesh,
    dm: DofMap,
    params: PhysicalParams,
    nitsche: NitscheParams,
    batch: _EdgeBatch = None,
) -> Triplets:
    """Weak membrane condition, matrix part: the two consistency terms and
    the alpha/h_E penalty on the normal velocity, h_E the local edge length."""
    eb = batch if batch is not None else membrane_batch(mesh, dm)
    if eb.count == 0:
        return Triplets.empty()
    w = eb.qweights
    vn = eb.normal_trace()
    flux, all_dofs = eb.flux_trace(params.mu0, dm.n_p2)
    vel_dofs = eb.velocity_dofs(dm.n_p2)

    # penalty: alpha/h * integral -> the edge length cancels.
    pen = nitsche.alpha * np.einsum("q,eqi,eqj->eij", w, vn, vn)
    con = -np.einsum("q,eqi,eqJ->eiJ", w, vn, flux) * eb.lengths[:, None, None]
    return Triplets.concat(
        [
            _expand_block(vel_dofs, vel_dofs, pen),
            _expand_block(vel_dofs, all_dofs, con),
            _expand_block(all_dofs, vel_dofs, np.swapaxes(con, 1, 2)),
        ]
    )


def _membrane_rhs(dm, params, nitsche, eb, g_at_qp):
    """Right-hand side of the weak membrane condition for target data g."""
    rhs = np.zeros(dm.n_flow)
    if eb.count == 0:
        return rhs
    w = eb.qweights
    vn = eb.normal_trace()
    flux, all_dofs = eb.flux_trace(params.mu0, dm.n_p2)
    vel_dofs = eb.velocity_dofs(dm.n_p2)
    pen = nitsche.alpha * np.einsum("q,eq,eqi->ei", w, g_at_qp, vn)
    con = -np.einsum("q,eq,eqJ->eJ", w, g_at_qp, flux) * eb.lengths[:, None]
    np.add.at(rhs, vel_dofs.ravel(), pen.ravel())
    np.add.at(rhs, all_dofs.ravel(), con.ravel())
    return rhs


def assemble_membrane_drive(
    mesh: Mesh,
    dm: DofMap,
    params: PhysicalParams,
    nitsche: NitscheParams,
    batch: _EdgeBatch = None,
    drive=None,
) -> np.ndarray:
    """Constant pressure-drive load with target velocity dP/I0 (or ``drive``)."""
    eb = batch if batch is not None else membrane_batch(mesh, dm)
    if eb.count == 0:
        return np.zeros(dm.n_flow)
    g0 = params.dP / params.I0 if drive is None else drive
    g = np.full((eb.count, len(eb.qweights)), g0)
    return _membrane_rhs(dm, params, nitsche, eb, g)


def assemble_osmotic_load(
    mesh: Mesh,
    dm: DofMap,
    params: PhysicalParams,
    nitsche: NitscheParams,
    theta: np.ndarray,
    batch: _EdgeBatch = None,
) -> np.ndarray:
    """Osmotic retardation kappa*theta/I0 evaluated at a frozen concentration.

    Enters the fixed-point flow solve on the right-hand side with a minus
    sign (the effective membrane target is (dP - kappa*theta)/I0)."""
    eb = batch if batch is not None else membrane_batch(mesh, dm)
    if eb.count == 0:
        return np.zeros(dm.n_flow)
    t = EDGE_GAUSS3_POINTS
    th = theta[eb.va][:, None] * (1.0 - t)[None, :] + theta[eb.vb][:, None] * t[None, :]
    g = params.kappa * th / params.I0
    return _membrane_rhs(dm, params, nitsche, eb, g)


def assemble_body_force(mesh: Mesh, dm: DofMap, force) -> np.ndarray:
    """Momentum load (f, v) for a callable force(coords) -> (n, 2)."""
    lam = TRI_DEGREE4_POINTS
    w = TRI_DEGREE4_WEIGHTS
    N = p2_shape(lam)
    xq = np.einsum("qa,cak->cqk", lam, mesh.vertices[mesh.cells])
    fq = force(xq.reshape(-1, 2)).reshape(xq.shape)
    load = np.einsum("q,qi,cqk->cik", w, N, fq) * mesh.areas[:, None, None]
    rhs = np.zeros(dm.n_flow)
    np.add.at(rhs, dm.cell_p2.ravel(), load[..., 0].ravel())
    np.add.at(rhs, (dm.n_p2 + dm.cell_p2).ravel(), load[..., 1].ravel())
    return rhs


def supg_tau(speed, h, D0):
    """Classical streamline stabilization time scale
    tau = h/(2|u|) (coth(Pe) - 1/Pe), Pe = |u| h / (2 D0)."""
    speed = np.asarray(speed, dtype=float)
    h = np.asarray(h, dtype=float)
    pe = speed * h / (2.0 * D0)
    small = pe < 1e-4
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        xi = np.where(small, pe / 3.0 - pe**3 / 45.0, 1.0 / np.tanh(np.maximum(pe, 1e-300)) - 1.0 / np.maximum(pe, 1e-300))
    tau = np.where(
        speed > 1e-300, h / (2.0 * np.maximum(speed, 1e-300)) * xi, h * h / (12.0 * D0)
    )
    return tau


def assemble_transport(
    mesh: Mesh,
    dm: DofMap,
    params: PhysicalParams,
    vel: np.ndarray,
    *,
    supg: bool = False,
    source=None,
):
    """P1 convection-diffusion system driven by the velocity ``vel``.

    Includes the membrane/wall boundary term -(theta u.n, tau); the wall part
    vanishes for no-slip walls but is assembled for generality.  With ``supg``
    the streamline term tau_K (u.grad theta, u.grad tau) and, if a source is
    given, the consistent tau_K (s, u.grad tau) load are added.
    Returns (Triplets, rhs).
    """
    lam = TRI_DEGREE4_POINTS
    w = TRI_DEGREE4_WEIGHTS
    N2 = p2_shape(lam)
    gl = mesh.grad_lambda
    A = mesh.areas
    uq = _velocity_at(N2, vel, dm.cell_p2)  # (C, Q, 2)

    K = params.D0 * np.einsum("cak,cbk->cab", gl, gl) * A[:, None, None]
    ugb = np.einsum("cqk,cbk->cqb", uq, gl)  # u . grad(basis_b)
    C = np.einsum("q,qa,cqb->cab", w, lam, ugb) * A[:, None, None]

    verts = mesh.cells
    blocks = [_expand_block(verts, verts, K + C)]
    rhs = np.zeros(dm.n_theta)

    tau = None
    if supg:
        p = mesh.vertices[mesh.cells]
        e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]
        h = np.hypot(e[..., 0], e[..., 1]).max(axis=1)
        lam_c = np.full((1, 3), 1.0 / 3.0)
        uc = _velocity_at(p2_shape(lam_c), vel, dm.cell_p2)[:, 0, :]
        speed = np.hypot(uc[:, 0], uc[:, 1])
        tau = supg_tau(speed, h, params.D0)
        S = (
            np.einsum("q,cqa,cqb->cab", w, ugb, ugb)
            * (tau * A)[:, None, None]
        )
        blocks.append(_expand_block(verts, verts, S))

    if source is not None:
        xq = np.einsum("qa,cak->cqk", lam, mesh.vertices[mesh.cells])
        sq = source(xq.reshape(-1, 2)).reshape(xq.shape[:2])
        F = np.einsum("q,qa,cq->ca", w, lam, sq) * A[:, None]
        if supg:
            F = F + np.einsum("q,cq,cqa->ca", w, sq, ugb) * (tau * A)[:, None]
        np.add.at(rhs, verts.ravel(), F.ravel())

    eb = _EdgeBatch(mesh, dm, [BoundaryTag.MEMBRANE, BoundaryTag.WALL])
    if eb.count:
        u_edge = np.einsum("eqi,eik->eqk", eb.shape, vel[eb.p2_dofs])
        un = np.einsum("eqk,ek->eq", u_edge, eb.normals)
        t = EDGE_GAUSS3_POINTS
        psi = np.stack([1.0 - t, t], axis=-1)  # (Q, 2)
        M = -np.einsum("q,qa,qb,eq->eab", eb.qweights, psi, psi, un) * eb.lengths[
            :, None, None
        ]
        ends = np.column_stack([eb.va, eb.vb])
        blocks.append(_expand_block(ends, ends, M))

    return Triplets.concat(blocks), rhs


def apply_dirichlet(system: SparseSystem, mask: np.ndarray, values: np.ndarray):
    """Eliminate constrained dofs symmetrically.

    Returns the reduced system and the indices of the free dofs; known values
    are moved to the right-hand side."""
    free = np.nonzero(~mask)[0]
    fixed = np.nonzero(mask)[0]
    A = system.matrix.tocsr()
    Af = A[free]
    b = system.rhs[free] - Af[:, fixed] @ values[fixed]
    return SparseSystem(Af[:, free].tocsr(), b), free


def reduce_triplets(trip: Triplets, rhs, mask, values):
    """Triplet-level Dirichlet elimination (fast path used inside solves)."""
    free = ~mask
    new_id = np.cumsum(free) - 1
    n_free = int(free.sum())
    rfree = free[trip.rows]
    keep = rfree & free[trip.cols]
    reduced = Triplets(
        new_id[trip.rows[keep]], new_id[trip.cols[keep]], trip.vals[keep]
    )
    move = rfree & ~free[trip.cols]
    b = rhs[free].copy() if rhs is not None else np.zeros(n_free)
    np.subtract.at(
        b, new_id[trip.rows[move]], trip.vals[move] * values[trip.cols[move]]
    )
    return reduced, b, n_free


def expand_solution(x_free, mask, values):
    full = values.copy()
    full[~mask] = x_free
    return full
