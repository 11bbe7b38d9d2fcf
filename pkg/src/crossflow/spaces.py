"""Finite element spaces and degree-of-freedom bookkeeping.

Velocity uses continuous piecewise quadratics (nodes at vertices and edge
midpoints), pressure and concentration continuous piecewise linears — the
lowest-order Taylor-Hood pair plus a P1 scalar.

Flow system dof layout: [u_x at all P2 nodes | u_y at all P2 nodes | p at
vertices].  The concentration lives in its own vertex-based system.
"""

from dataclasses import dataclass, field

import numpy as np

from .mesh import BoundaryTag, Mesh


@dataclass(frozen=True)
class FemSpaces:
    velocity_degree: int = 2
    pressure_degree: int = 1
    concentration_degree: int = 1

    def __post_init__(self):
        if self.velocity_degree != self.pressure_degree + 1:
            raise ValueError("velocity/pressure degrees must form a Taylor-Hood pair")
        if self.concentration_degree < 1:
            raise ValueError("concentration degree must be >= 1")
        if (self.velocity_degree, self.concentration_degree) != (2, 1):
            raise NotImplementedError(
                "only the lowest-order pair (P2/P1 velocity-pressure, P1 "
                "concentration) is implemented"
            )


def parabolic_inlet(u0: float, d: float):
    """Fully developed inlet profile with mean speed u0."""

    def profile(coords):
        s = coords[:, 1] / d
        vals = np.zeros_like(coords)
        vals[:, 0] = 6.0 * u0 * s * (1.0 - s)
        return vals

    return profile


@dataclass
class DofMap:
    """Global numbering plus Dirichlet masks/values for one mesh.

    ``membrane_weak`` records whether the membrane-normal velocity is left to
    the weak (Nitsche) treatment; in that case only the tangential component
    is constrained on membrane edges.
    """

    mesh: Mesh
    spaces: FemSpaces
    n_p2: int
    node_xy: np.ndarray
    cell_p2: np.ndarray
    flow_dirichlet: np.ndarray
    flow_values: np.ndarray
    theta_dirichlet: np.ndarray
    theta_values: np.ndarray
    membrane_weak: bool
    pressure_pinned: bool = False

    @property
    def n_flow(self):
        return 2 * self.n_p2 + self.mesh.n_vertices

    @property
    def n_theta(self):
        return self.mesh.n_vertices

    def ux(self, nodes):
        return np.asarray(nodes)

    def uy(self, nodes):
        return self.n_p2 + np.asarray(nodes)

    def p(self, verts):
        return 2 * self.n_p2 + np.asarray(verts)

    def velocity_nodes_of_tag(self, tag):
        sel = self.mesh.boundary_tags == int(tag)
        verts = self.mesh.boundary_edges[sel].ravel()
        mids = self.mesh.n_vertices + self.mesh.boundary_edge_ids[sel]
        return np.unique(np.concatenate([verts, mids]))


def build_dofmap(
    mesh: Mesh,
    spaces: FemSpaces = FemSpaces(),
    *,
    inlet_velocity=None,
    theta_inlet: float = 0.0,
    membrane_normal: str = "nitsche",
    dirichlet_velocity=None,
    dirichlet_theta=None,
    pin_pressure: bool = False,
) -> DofMap:
    """Assign dofs and Dirichlet data.

    membrane_normal: 'nitsche' leaves u.n free on membrane edges for the weak
    membrane law; 'strong_zero' pins it to zero (impermeable wall).  Both
    constrain the tangential component.  ``dirichlet_velocity`` /
    ``dirichlet_theta``, when given, impose callable data on every boundary
    node and override the tag-wise rules (manufactured-solution runs).
    """
    if membrane_normal not in ("nitsche", "strong_zero"):
        raise ValueError(f"unknown membrane_normal mode {membrane_normal!r}")
    nv = mesh.n_vertices
    n_p2 = nv + mesh.n_edges
    node_xy = np.vstack(
        [mesh.vertices, 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])]
    )
    cell_p2 = np.hstack([mesh.cells, nv + mesh.cell_edges])

    n_flow = 2 * n_p2 + nv
    fmask = np.zeros(n_flow, dtype=bool)
    fvals = np.zeros(n_flow)
    tmask = np.zeros(nv, dtype=bool)
    tvals = np.zeros(nv)

    dm = DofMap(
        mesh=mesh,
        spaces=spaces,
        n_p2=n_p2,
        node_xy=node_xy,
        cell_p2=cell_p2,
        flow_dirichlet=fmask,
        flow_values=fvals,
        theta_dirichlet=tmask,
        theta_values=tvals,
        membrane_weak=(membrane_normal == "nitsche" and dirichlet_velocity is None),
        pressure_pinned=pin_pressure,
    )

    if dirichlet_velocity is not None:
        nodes = np.unique(
            np.concatenate(
                [dm.velocity_nodes_of_tag(t) for t in BoundaryTag]
                + [np.array([], dtype=np.int64)]
            )
        )
        vals = dirichlet_velocity(node_xy[nodes])
        fmask[dm.ux(nodes)] = True
        fvals[dm.ux(nodes)] = vals[:, 0]
        fmask[dm.uy(nodes)] = True
        fvals[dm.uy(nodes)] = vals[:, 1]
    else:
        # Precedence: membrane < wall < inlet, so inlet data wins at corners.
        mem = dm.velocity_nodes_of_tag(BoundaryTag.MEMBRANE)
        fmask[dm.ux(mem)] = True
        fvals[dm.ux(mem)] = 0.0
        if membrane_normal == "strong_zero":
            # Membranes are horizontal, so the normal component is u_y.
            sel = mesh.boundary_tags == int(BoundaryTag.MEMBRANE)
            if sel.any() and np.any(np.abs(mesh.boundary_normals[sel, 0]) > 1e-9):
                raise ValueError(
                    "strong_zero membrane treatment requires horizontal membranes"
                )
            fmask[dm.uy(mem)] = True
            fvals[dm.uy(mem)] = 0.0
        wall = dm.velocity_nodes_of_tag(BoundaryTag.WALL)
        fmask[dm.ux(wall)] = True
        fvals[dm.ux(wall)] = 0.0
        fmask[dm.uy(wall)] = True
        fvals[dm.uy(wall)] = 0.0
        inl = dm.velocity_nodes_of_tag(BoundaryTag.INLET)
        if inl.size and inlet_velocity is not None:
            vals = inlet_velocity(node_xy[inl])
            fmask[dm.ux(inl)] = True
            fvals[dm.ux(inl)] = vals[:, 0]
            fmask[dm.uy(inl)] = True
            fvals[dm.uy(inl)] = vals[:, 1]

    if dirichlet_theta is not None:
        bverts = np.unique(mesh.boundary_edges.ravel())
        tmask[bverts] = True
        tvals[bverts] = dirichlet_theta(mesh.vertices[bverts])
    else:
        sel = mesh.boundary_tags == int(BoundaryTag.INLET)
        inlet_verts = np.unique(mesh.boundary_edges[sel].ravel())
        tmask[inlet_verts] = True
        tvals[inlet_verts] = theta_inlet

    if pin_pressure:
        fmask[dm.p(0)] = True
        fvals[dm.p(0)] = 0.0

    return dm
