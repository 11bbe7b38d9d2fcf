"""Extraction of reported quantities from converged fields.

Pressure is sampled along the channel mid-height by barycentric interpolation
with a walk search between consecutive sample points; membrane quantities are
integrated edge-wise with the 3-point Gauss rule (the trace of a quadratic
velocity on an edge depends only on the three edge nodes).
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .geometry import ChannelGeometry
from .mesh import BoundaryTag, Mesh
from .params import PhysicalParams
from .quadrature import EDGE_GAUSS3_POINTS, EDGE_GAUSS3_WEIGHTS
from .solver import SolutionFields


@dataclass
class LineProfile:
    x: np.ndarray
    values: np.ndarray
    name: str
    skipped: list = field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.x) != len(self.values):
            raise ValueError("coordinate/value length mismatch")
        if len(self.x) > 1 and np.any(np.diff(self.x) <= 0):
            raise ValueError("profile coordinates must be strictly increasing")


def build_cell_neighbors(mesh: Mesh) -> np.ndarray:
    """(nc, 3) neighbor cell across each local edge, -1 on the boundary."""
    nc = mesh.n_cells
    flat = mesh.cell_edges.ravel()
    order = np.argsort(flat, kind="stable")
    se = flat[order]
    sc = order // 3
    sl = order % 3
    neighbors = np.full((nc, 3), -1, dtype=np.int64)
    interior = np.nonzero((se[:-1] == se[1:]))[0]
    c1, l1 = sc[interior], sl[interior]
    c2, l2 = sc[interior + 1], sl[interior + 1]
    neighbors[c1, l1] = c2
    neighbors[c2, l2] = c1
    return neighbors


def _barycentric(mesh, cell, point):
    cent = mesh.vertices[mesh.cells[cell]].mean(axis=0)
    return 1.0 / 3.0 + mesh.grad_lambda[cell] @ (point - cent)


def locate_point(mesh: Mesh, point, neighbors=None, start_cell=0, tol=1e-10):
    """Walk search for the cell containing ``point``; returns -1 if outside."""
    if neighbors is None:
        neighbors = build_cell_neighbors(mesh)
    c = int(start_cell) if 0 <= start_cell < mesh.n_cells else 0
    for _ in range(mesh.n_cells + 4):
        lam = _barycentric(mesh, c, point)
        if lam.min() >= -tol:
            return c
        nxt = neighbors[c, int(np.argmin(lam))]
        if nxt < 0:
            break
        c = nxt
    # Fallback: brute-force containment test (walks can stall at holes).
    cents = mesh.cell_centroids()
    lam_all = (
        1.0 / 3.0
        + np.einsum("cik,ck->ci", mesh.grad_lambda, point[None, :] - cents)
    )
    inside = np.nonzero(lam_all.min(axis=1) >= -tol)[0]
    return int(inside[0]) if inside.size else -1


def evaluate_p1(mesh: Mesh, coeffs, point, neighbors=None, start_cell=0):
    cell = locate_point(mesh, np.asarray(point, float), neighbors, start_cell)
    if cell < 0:
        return None, -1
    lam = np.clip(_barycentric(mesh, cell, np.asarray(point, float)), 0.0, 1.0)
    lam = lam / lam.sum()
    return float(lam @ coeffs[mesh.cells[cell]]), cell


def pressure_drop_profile(
    fields: SolutionFields, mesh: Mesh, n_samples: int = 11
) -> LineProfile:
    """p(0, d/2) - p(x_i, d/2) at equispaced x_i; samples falling outside the
    fluid (submerged filament holes) are skipped and recorded."""
    L = float(mesh.vertices[:, 0].max())
    d = float(mesh.vertices[:, 1].max())
    xs = np.linspace(0.0, L, n_samples)
    neighbors = build_cell_neighbors(mesh)
    p0, cell = evaluate_p1(mesh, fields.pressure, np.array([0.0, d / 2.0]), neighbors)
    if p0 is None:
        raise ValueError("mid-height inlet point is outside the mesh")
    kept_x, kept_v, skipped = [], [], []
    for x in xs:
        val, cell_hit = evaluate_p1(
            mesh, fields.pressure, np.array([x, d / 2.0]), neighbors,
            start_cell=cell if cell >= 0 else 0,
        )
        if val is None:
            skipped.append(float(x))
            continue
        cell = cell_hit
        kept_x.append(float(x))
        kept_v.append(p0 - val)
    return LineProfile(np.array(kept_x), np.array(kept_v), "pressure_drop", skipped)


def _membrane_side(mesh: Mesh, wall: str):
    d = float(mesh.vertices[:, 1].max())
    sel = np.nonzero(mesh.boundary_tags == int(BoundaryTag.MEMBRANE))[0]
    mids = 0.5 * (
        mesh.vertices[mesh.boundary_edges[sel, 0]]
        + mesh.vertices[mesh.boundary_edges[sel, 1]]
    )
    if wall == "bottom":
        sel = sel[mids[:, 1] < d / 2.0]
    elif wall == "top":
        sel = sel[mids[:, 1] >= d / 2.0]
    else:
        raise ValueError("wall must be 'bottom' or 'top'")
    mids = 0.5 * (
        mesh.vertices[mesh.boundary_edges[sel, 0]]
        + mesh.vertices[mesh.boundary_edges[sel, 1]]
    )
    order = np.argsort(mids[:, 0])
    return sel[order], mids[order]


def permeate_profile(fields: SolutionFields, mesh: Mesh, wall: str = "bottom"):
    """Signed wall-normal velocity u_y and concentration along one membrane
    wall, sampled at edge midpoints ordered by x.  Returns (velocity profile,
    concentration profile)."""
    sel, mids = _membrane_side(mesh, wall)
    mid_nodes = mesh.n_vertices + mesh.boundary_edge_ids[sel]
    # The edge midpoint is itself a velocity node.
    uy = fields.velocity[mid_nodes, 1]
    th = 0.5 * (
        fields.theta[mesh.boundary_edges[sel, 0]]
        + fields.theta[mesh.boundary_edges[sel, 1]]
    )
    return (
        LineProfile(mids[:, 0], uy, f"permeate_velocity_{wall}"),
        LineProfile(mids[:, 0], th, f"wall_concentration_{wall}"),
    )


def _edge_trace(mesh: Mesh, fields: SolutionFields, sel):
    """u (E, Q, 2) at the Gauss points of the selected boundary edges."""
    t = EDGE_GAUSS3_POINTS
    va = mesh.boundary_edges[sel, 0]
    vb = mesh.boundary_edges[sel, 1]
    vm = mesh.n_vertices + mesh.boundary_edge_ids[sel]
    Na = (1.0 - t) * (1.0 - 2.0 * t)
    Nb = t * (2.0 * t - 1.0)
    Nm = 4.0 * t * (1.0 - t)
    u = (
        fields.velocity[va][:, None, :] * Na[None, :, None]
        + fields.velocity[vb][:, None, :] * Nb[None, :, None]
        + fields.velocity[vm][:, None, :] * Nm[None, :, None]
    )
    return u


def volumetric_flow_per_width(fields: SolutionFields, mesh: Mesh) -> float:
    """Permeate volumetric flow per unit channel width: the integral of
    |u_y| over every membrane edge [m^3/(s m)]."""
    sel = np.nonzero(mesh.boundary_tags == int(BoundaryTag.MEMBRANE))[0]
    if sel.size == 0:
        return 0.0
    u = _edge_trace(mesh, fields, sel)
    w = EDGE_GAUSS3_WEIGHTS
    per_edge = np.einsum("q,eq->e", w, np.abs(u[..., 1])) * mesh.boundary_lengths[sel]
    return float(per_edge.sum())


def total_mass_flow(
    fields: SolutionFields, mesh: Mesh, geom: ChannelGeometry, params: PhysicalParams
) -> float:
    """Total permeate mass flow rho0 W * integral of |u_y| over the
    membranes [kg/s]."""
    return params.rho0 * geom.W * volumetric_flow_per_width(fields, mesh)


@dataclass
class FluxBoundsReport:
    x: np.ndarray
    flux: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    max_violation: float


def membrane_flux_report(
    fields: SolutionFields, mesh: Mesh, params: PhysicalParams
) -> FluxBoundsReport:
    """Permeate speed u.n at membrane edge midpoints against the pointwise
    law bracket [(dP - kappa*theta_wall)/I0, dP/I0]; ``max_violation`` is the
    measured weak-imposition error."""
    sel = np.nonzero(mesh.boundary_tags == int(BoundaryTag.MEMBRANE))[0]
    mids = 0.5 * (
        mesh.vertices[mesh.boundary_edges[sel, 0]]
        + mesh.vertices[mesh.boundary_edges[sel, 1]]
    )
    mid_nodes = mesh.n_vertices + mesh.boundary_edge_ids[sel]
    un = np.einsum("ek,ek->e", fields.velocity[mid_nodes], mesh.boundary_normals[sel])
    th = 0.5 * (
        fields.theta[mesh.boundary_edges[sel, 0]]
        + fields.theta[mesh.boundary_edges[sel, 1]]
    )
    lower = (params.dP - params.kappa * th) / params.I0
    upper = np.full_like(lower, params.dP / params.I0)
    violation = np.maximum(np.maximum(lower - un, un - upper), 0.0)
    order = np.argsort(mids[:, 0])
    return FluxBoundsReport(
        x=mids[order, 0],
        flux=un[order],
        lower=lower[order],
        upper=upper[order],
        max_violation=float(violation.max()) if violation.size else 0.0,
    )


@dataclass
class BoundaryFluxReport:
    inlet: float
    outlet: float
    membrane: float
    wall: float

    @property
    def imbalance(self):
        return self.inlet + self.outlet + self.membrane + self.wall

    @property
    def relative_imbalance(self):
        return abs(self.imbalance) / max(abs(self.inlet), 1e-300)


def boundary_flux_report(fields: SolutionFields, mesh: Mesh) -> BoundaryFluxReport:
    """Signed flux of u.n through each tagged boundary group."""
    w = EDGE_GAUSS3_WEIGHTS
    totals = {}
    for tag in BoundaryTag:
        sel = np.nonzero(mesh.boundary_tags == int(tag))[0]
        if sel.size == 0:
            totals[tag.name.lower()] = 0.0
            continue
        u = _edge_trace(mesh, fields, sel)
        un = np.einsum("eqk,ek->eq", u, mesh.boundary_normals[sel])
        totals[tag.name.lower()] = float(
            (np.einsum("q,eq->e", w, un) * mesh.boundary_lengths[sel]).sum()
        )
    return BoundaryFluxReport(**totals)


def concentration_undershoot(fields: SolutionFields) -> float:
    """Magnitude of the negative excursion of the concentration field."""
    return float(max(0.0, -fields.theta.min()))


def export_csv(profiles, path, run_id="run"):
    """Deterministic CSV export: columns x, value, field, run_id."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "value", "field", "run_id"])
        for prof in profiles:
            for x, v in zip(prof.x, prof.values):
                writer.writerow([f"{x:.12e}", f"{v:.12e}", prof.name, run_id])


def read_csv(path):
    """Inverse of :func:`export_csv`; returns a list of LineProfile."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x", "value", "field", "run_id"]:
            raise ValueError(f"unexpected CSV header {header}")
        rows = list(reader)
    profiles = {}
    for x, v, name, _ in rows:
        profiles.setdefault(name, ([], []))
        profiles[name][0].append(float(x))
        profiles[name][1].append(float(v))
    return [
        LineProfile(np.array(xs), np.array(vs), name)
        for name, (xs, vs) in profiles.items()
    ]
