"""Triangular meshes of the feed channel.

Rectangle meshes are structured with ``n_x = round((L/d) * n_y)`` columns and
optional geometric grading toward both membrane walls.  Spacer meshes place
the mesh columns so that polygonized filament arcs (32+ segments per arc) are
boundary edges by construction, then relax the triangulation to a constrained
Delaunay one by Lawson edge flips.  A finished mesh is immutable.
"""

from collections import deque
from dataclasses import dataclass, asdict
from enum import IntEnum

import numpy as np

from .geometry import ChannelGeometry, GradingMode, GradingSpec, SpacerConfig

# Stations across a filament footprint; one polygon segment per station gap,
# two per gap for submerged circles, so every arc gets >= 32 segments.
ARC_SEGMENTS = 48

# Wall-attached filaments are full circles tangent to the membrane; the
# unmeshable cusp between circle and wall is closed by a straight ramp from
# the circle's equator to the wall, CUSP_RAMP_FRACTION * radius long.
CUSP_RAMP_FRACTION = 0.5


class MeshError(RuntimeError):
    pass


class BoundaryTag(IntEnum):
    INLET = 1
    OUTLET = 2
    MEMBRANE = 3
    WALL = 4


def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def graded_profile(n: int, ratio: float) -> np.ndarray:
    """n+1 nodes on [0, 1], spacings in geometric progression with ``ratio``,
    finest at both ends, symmetric about the midpoint."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if ratio < 1.0:
        raise ValueError("ratio must be >= 1")
    if ratio == 1.0 or n == 1:
        return np.linspace(0.0, 1.0, n + 1)
    m = n // 2
    spac = ratio ** np.arange(m, dtype=float)
    if n % 2 == 0:
        half = np.concatenate([[0.0], np.cumsum(spac)])
        half /= 2.0 * half[-1]
        return np.concatenate([half, 1.0 - half[-2::-1]])
    total = 2.0 * spac.sum() + ratio**m
    lower = np.concatenate([[0.0], np.cumsum(spac)]) / total
    return np.concatenate([lower, 1.0 - lower[::-1]])


class Mesh:
    """Conforming triangulation with tagged boundary edges.

    Attributes (all arrays read-only):
      vertices          (nv, 2) coordinates
      cells             (nc, 3) vertex indices, counter-clockwise
      edges             (ne, 2) unique edges as sorted vertex pairs
      cell_edges        (nc, 3) edge ids, edge k opposite local vertex k
      boundary_edges    (nb, 2) vertex pairs oriented with the fluid on the left
      boundary_tags     (nb,)   BoundaryTag values
      boundary_cells    (nb,)   adjacent cell index
      boundary_normals  (nb, 2) outward unit normals
      boundary_lengths  (nb,)
      boundary_edge_ids (nb,)   index into ``edges``
      areas             (nc,)   cell areas
      grad_lambda       (nc, 3, 2) gradients of the barycentric coordinates
    """

    def __init__(self, vertices, cells, *, classifier=None, edge_tag_map=None):
        xy = np.ascontiguousarray(vertices, dtype=float)
        tri = np.ascontiguousarray(cells, dtype=np.int64)
        if xy.ndim != 2 or xy.shape[1] != 2:
            raise MeshError("vertices must be an (n, 2) array")
        if tri.ndim != 2 or tri.shape[1] != 3:
            raise MeshError("cells must be an (n, 3) array")
        if tri.size and (tri.min() < 0 or tri.max() >= len(xy)):
            raise MeshError("cell vertex index out of range")

        p0, p1, p2 = xy[tri[:, 0]], xy[tri[:, 1]], xy[tri[:, 2]]
        two_area = _cross2(p1 - p0, p2 - p0)
        flipped = two_area < 0
        tri[flipped] = tri[flipped][:, [0, 2, 1]]
        two_area = np.abs(two_area)
        scale = max(np.ptp(xy[:, 0]), np.ptp(xy[:, 1]), 1e-300)
        if np.any(two_area <= 1e-14 * scale**2):
            raise MeshError("mesh contains a degenerate (zero-area) cell")

        nc = len(tri)
        nv = len(xy)
        local_pairs = tri[:, [[1, 2], [2, 0], [0, 1]]]  # edge k opposite vertex k
        lo = local_pairs.min(axis=2).ravel()
        hi = local_pairs.max(axis=2).ravel()
        codes = lo * nv + hi
        ucodes, inverse, counts = np.unique(
            codes, return_inverse=True, return_counts=True
        )
        edges = np.column_stack([ucodes // nv, ucodes % nv])
        cell_edges = inverse.reshape(nc, 3)

        occurrence = np.empty(len(ucodes), dtype=np.int64)
        occurrence[inverse] = np.arange(3 * nc)
        if np.any(counts > 2):
            raise MeshError("non-manifold edge (more than two adjacent cells)")
        b_eids = np.nonzero(counts == 1)[0]
        occ = occurrence[b_eids]
        b_cells = occ // 3
        b_local = occ % 3
        a = tri[b_cells, (b_local + 1) % 3]
        b = tri[b_cells, (b_local + 2) % 3]
        tvec = xy[b] - xy[a]
        lengths = np.hypot(tvec[:, 0], tvec[:, 1])
        normals = np.column_stack([tvec[:, 1], -tvec[:, 0]]) / lengths[:, None]

        order = np.lexsort((xy[a, 1] + xy[b, 1], xy[a, 0] + xy[b, 0]))
        a, b = a[order], b[order]
        b_cells, b_eids = b_cells[order], b_eids[order]
        normals, lengths = normals[order], lengths[order]

        if edge_tag_map is not None:
            tags = np.zeros(len(a), dtype=np.int64)
            for i in range(len(a)):
                key = (min(a[i], b[i]), max(a[i], b[i]))
                if key not in edge_tag_map:
                    mid = 0.5 * (xy[a[i]] + xy[b[i]])
                    raise MeshError(
                        f"untagged boundary edge between vertices {key[0]} and "
                        f"{key[1]} near ({mid[0]:.6g}, {mid[1]:.6g})"
                    )
                tags[i] = int(edge_tag_map[key])
        elif classifier is not None:
            mids = 0.5 * (xy[a] + xy[b])
            tags = np.asarray(classifier(mids), dtype=np.int64)
            if np.any(tags == 0):
                i = int(np.nonzero(tags == 0)[0][0])
                raise MeshError(
                    f"boundary edge near ({mids[i, 0]:.6g}, {mids[i, 1]:.6g}) "
                    "could not be classified"
                )
        else:
            raise MeshError("either classifier or edge_tag_map is required")

        # Barycentric gradients: grad(lambda_i) = (y_j - y_k, x_k - x_j) / (2A).
        v0, v1, v2 = xy[tri[:, 0]], xy[tri[:, 1]], xy[tri[:, 2]]
        gl = np.empty((nc, 3, 2))
        gl[:, 0, 0] = v1[:, 1] - v2[:, 1]
        gl[:, 0, 1] = v2[:, 0] - v1[:, 0]
        gl[:, 1, 0] = v2[:, 1] - v0[:, 1]
        gl[:, 1, 1] = v0[:, 0] - v2[:, 0]
        gl[:, 2, 0] = v0[:, 1] - v1[:, 1]
        gl[:, 2, 1] = v1[:, 0] - v0[:, 0]
        gl /= two_area[:, None, None]

        self.vertices = xy
        self.cells = tri
        self.edges = edges
        self.cell_edges = cell_edges
        self.boundary_edges = np.column_stack([a, b])
        self.boundary_tags = tags
        self.boundary_cells = b_cells
        self.boundary_normals = normals
        self.boundary_lengths = lengths
        self.boundary_edge_ids = b_eids
        self.areas = 0.5 * two_area
        self.grad_lambda = gl
        for arr in (
            self.vertices, self.cells, self.edges, self.cell_edges,
            self.boundary_edges, self.boundary_tags, self.boundary_cells,
            self.boundary_normals, self.boundary_lengths,
            self.boundary_edge_ids, self.areas, self.grad_lambda,
        ):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return len(self.edges)

    def boundary_where(self, tag: BoundaryTag) -> np.ndarray:
        return np.nonzero(self.boundary_tags == int(tag))[0]

    def cell_centroids(self) -> np.ndarray:
        return self.vertices[self.cells].mean(axis=1)


def validate_mesh(mesh: Mesh):
    """Check structural invariants; raises MeshError on violation."""
    if np.any(mesh.areas <= 0):
        raise MeshError("non-positive cell area")
    mids = 0.5 * (
        mesh.vertices[mesh.boundary_edges[:, 0]]
        + mesh.vertices[mesh.boundary_edges[:, 1]]
    )
    cent = mesh.vertices[mesh.cells[mesh.boundary_cells]].mean(axis=1)
    inward = np.einsum("ij,ij->i", mesh.boundary_normals, cent - mids)
    if np.any(inward >= 0):
        i = int(np.argmax(inward))
        raise MeshError(f"boundary normal {i} does not point out of the domain")
    # A corner vertex may join at most two differently tagged boundary runs.
    tag_sets = {}
    for (va, vb), t in zip(mesh.boundary_edges, mesh.boundary_tags):
        tag_sets.setdefault(int(va), set()).add(int(t))
        tag_sets.setdefault(int(vb), set()).add(int(t))
    worst = max(len(s) for s in tag_sets.values()) if tag_sets else 0
    if worst > 2:
        raise MeshError("boundary vertex joins more than two tag groups")


@dataclass
class MeshQualityReport:
    n_vertices: int
    n_cells: int
    n_edges: int
    min_area: float
    max_area: float
    total_area: float
    min_angle_deg: float
    max_aspect_ratio: float
    euler_characteristic: int
    n_holes: int
    boundary: dict

    def as_dict(self):
        return asdict(self)


def _quality_arrays(xy, tri):
    p = xy[tri]  # (nc, 3, 2)
    e = p[:, [2, 0, 1]] - p[:, [1, 2, 0]]  # edge opposite each vertex
    elen = np.hypot(e[..., 0], e[..., 1])
    two_area = np.abs(_cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]))
    area = 0.5 * two_area
    s = 0.5 * elen.sum(axis=1)
    inradius = np.where(s > 0, area / np.maximum(s, 1e-300), 0.0)
    aspect = elen.max(axis=1) / np.maximum(2.0 * np.sqrt(3.0) * inradius, 1e-300)
    # Angle at vertex k lies between the two edges not opposite k.
    with np.errstate(invalid="ignore"):
        cosines = np.empty_like(elen)
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cosines[:, k] = np.einsum("ij,ij->i", u, v) / np.maximum(
                np.hypot(u[:, 0], u[:, 1]) * np.hypot(v[:, 0], v[:, 1]), 1e-300
            )
    angles = np.degrees(np.arccos(np.clip(cosines, -1.0, 1.0)))
    return area, aspect, angles.min(axis=1)


def mesh_quality(mesh: Mesh) -> MeshQualityReport:
    """Cell-shape statistics and per-tag boundary accounting."""
    area, aspect, min_angle = _quality_arrays(mesh.vertices, mesh.cells)
    chi = mesh.n_vertices - mesh.n_edges + mesh.n_cells
    boundary = {}
    for tag in BoundaryTag:
        sel = mesh.boundary_tags == int(tag)
        boundary[tag.name.lower()] = {
            "count": int(sel.sum()),
            "length": float(mesh.boundary_lengths[sel].sum()),
        }
    return MeshQualityReport(
        n_vertices=mesh.n_vertices,
        n_cells=mesh.n_cells,
        n_edges=mesh.n_edges,
        min_area=float(area.min()),
        max_area=float(area.max()),
        total_area=float(area.sum()),
        min_angle_deg=float(min_angle.min()),
        max_aspect_ratio=float(aspect.max()),
        euler_characteristic=int(chi),
        n_holes=int(1 - chi),
        boundary=boundary,
    )


def _rect_classifier(L, d):
    tol = 1e-9 * max(L, d)

    def classify(mids):
        tags = np.zeros(len(mids), dtype=np.int64)
        tags[np.abs(mids[:, 0]) < tol] = BoundaryTag.INLET
        tags[np.abs(mids[:, 0] - L) < tol] = BoundaryTag.OUTLET
        on_wall = (np.abs(mids[:, 1]) < tol) | (np.abs(mids[:, 1] - d) < tol)
        tags[on_wall & (tags == 0)] = BoundaryTag.MEMBRANE
        return tags

    return classify


def _spacer_classifier(geom: ChannelGeometry):
    L, d = geom.L, geom.d
    tol = 1e-9 * max(L, d)

    def classify(mids):
        tags = np.zeros(len(mids), dtype=np.int64)
        tags[np.abs(mids[:, 0]) < tol] = BoundaryTag.INLET
        tags[np.abs(mids[:, 0] - L) < tol] = BoundaryTag.OUTLET
        on_mem = (np.abs(mids[:, 1]) < tol) | (np.abs(mids[:, 1] - d) < tol)
        tags[on_mem & (tags == 0)] = BoundaryTag.MEMBRANE
        # Any other boundary can only be a filament surface.
        tags[tags == 0] = BoundaryTag.WALL
        return tags

    return classify


def build_rectangle_mesh(geom: ChannelGeometry, grading: GradingSpec) -> Mesh:
    """Structured triangulation of the plain channel."""
    if geom.config is not SpacerConfig.NO_SPACERS:
        raise MeshError("build_rectangle_mesh requires a spacer-free geometry")
    if grading.n_y < 2:
        raise ValueError("n_y must be >= 2")
    n_y = grading.n_y
    n_x = max(1, round(geom.L / geom.d * n_y))
    ratio = 1.0 if grading.mode is GradingMode.UNIFORM else grading.ratio
    xs = np.linspace(0.0, geom.L, n_x + 1)
    ys = geom.d * graded_profile(n_y, ratio)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    xy = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n_y + 1) + j

    i, j = np.meshgrid(np.arange(n_x), np.arange(n_y), indexing="ij")
    i, j = i.ravel(), j.ravel()
    t1 = np.column_stack([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
    t2 = np.column_stack([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    cells = np.vstack([t1, t2])
    return Mesh(xy, cells, classifier=_rect_classifier(geom.L, geom.d))


def _merge_stations(base, arc_groups, mandatory, min_gap):
    pts = [(x, 1) for x in mandatory]
    pts += [(x, 1) for g in arc_groups for x in g]
    pts += [(x, 0) for x in base]
    pts.sort()
    kept = []
    for x, prio in pts:
        if not kept:
            kept.append((x, prio))
            continue
        lx, lp = kept[-1]
        if x - lx > min_gap:
            kept.append((x, prio))
        elif prio > lp:
            kept[-1] = (x, prio)  # mandatory point displaces a close plain one
    return np.array([x for x, _ in kept])


def _bump_height(dx, r):
    """Obstruction height of a wall-tangent circular filament at offset dx
    from its center: the circle's upper surface over the footprint, linear
    ramps closing the tangency cusps outside it."""
    w = CUSP_RAMP_FRACTION * r
    a = abs(dx)
    if a * a < r * r * (1.0 - 1e-12):
        return r + np.sqrt(r * r - a * a)
    if a < r + w:
        return r * (1.0 - (a - r) / w)
    return 0.0


def _column_heights(x, circles, d, kind):
    """Free-fluid interval(s) of the vertical line at ``x``.

    kind 'bumps': returns (y_bot, y_top) for wall-attached filaments.
    kind 'holes': returns (y_lo, y_hi) cut out by submerged filaments,
    collapsed to the channel midline outside every footprint.
    """
    if kind == "bumps":
        y_bot, y_top = 0.0, d
        for cx, cy, r in circles:
            h = _bump_height(x - cx, r)
            if h > 0.0:
                if cy == 0.0:
                    y_bot = max(y_bot, h)
                else:
                    y_top = min(y_top, d - h)
        return y_bot, y_top
    y_lo = y_hi = d / 2.0
    for cx, cy, r in circles:
        dx = x - cx
        if dx * dx < r * r * (1.0 - 1e-12):
            h = np.sqrt(r * r - dx * dx)
            y_lo, y_hi = cy - h, cy + h
    return y_lo, y_hi


def spacer_footprint(geom: ChannelGeometry) -> float:
    """Membrane length blocked by one wall-attached filament (circle
    diameter plus the two cusp-closing ramps)."""
    return geom.d_S * (1.0 + CUSP_RAMP_FRACTION)


def spacer_obstruction_area(geom: ChannelGeometry) -> float:
    """Analytic cross-section area removed from the channel by one filament."""
    r = geom.d_S / 2.0
    if geom.config is SpacerConfig.SUBMERGED:
        return np.pi * r * r
    # Filled circle envelope (2 + pi/2) r^2 plus two ramp triangles.
    return (2.0 + np.pi / 2.0) * r * r + CUSP_RAMP_FRACTION * r * r


def _triangulate_column_strip(xy, ids_a, ids_b, cells):
    """Split the quads between two node columns along their shorter diagonal."""
    for j in range(len(ids_a) - 1):
        A, D = ids_a[j], ids_a[j + 1]
        B, C = ids_b[j], ids_b[j + 1]
        dAC = np.hypot(*(xy[A] - xy[C]))
        dBD = np.hypot(*(xy[B] - xy[D]))
        if dAC <= dBD:
            cells.append((A, B, C))
            cells.append((A, C, D))
        else:
            cells.append((A, B, D))
            cells.append((B, C, D))


def build_spacer_mesh(geom: ChannelGeometry, grading: GradingSpec) -> Mesh:
    """Boundary-conforming constrained Delaunay triangulation of a channel
    with spacer filaments (arcs polygonized with >= 32 segments each)."""
    if geom.config is SpacerConfig.NO_SPACERS:
        raise MeshError("build_spacer_mesh requires a spacer configuration")
    n_y = grading.n_y
    ratio = 1.0 if grading.mode is GradingMode.UNIFORM else grading.ratio
    circles = geom.spacer_circles()
    r = geom.d_S / 2.0
    for i in range(1, len(circles)):
        if circles[i][0] - circles[i - 1][0] <= geom.d_S:
            raise MeshError("overlapping spacers")

    submerged = geom.config is SpacerConfig.SUBMERGED
    n_x = max(1, round(geom.L / geom.d * n_y))
    base = np.linspace(0.0, geom.L, n_x + 1)
    half_fp = r if submerged else r * (1.0 + CUSP_RAMP_FRACTION)
    arc_dx = 2.0 * half_fp / ARC_SEGMENTS
    arc_groups = [
        np.clip(np.linspace(cx - half_fp, cx + half_fp, ARC_SEGMENTS + 1), 0.0, geom.L)
        for cx, _, _ in circles
    ]
    mandatory = [0.0, geom.L]
    min_gap = 0.3 * min(geom.L / n_x, arc_dx)
    stations = _merge_stations(base, arc_groups, mandatory, min_gap)

    coords = []
    low_cols, up_cols = [], []
    if submerged:
        m_l = n_y // 2
        m_u = n_y - m_l
        prof_l = graded_profile(m_l, ratio) if m_l >= 1 else np.array([0.0, 1.0])
        prof_u = graded_profile(m_u, ratio)
        for x in stations:
            y_lo, y_hi = _column_heights(x, circles, geom.d, "holes")
            ys_low = prof_l * y_lo
            ys_up = y_hi + prof_u * (geom.d - y_hi)
            if np.any(np.diff(ys_low) <= 0) or np.any(np.diff(ys_up) <= 0):
                raise MeshError("polygonization produced a self-intersecting column")
            ids_low = []
            for y in ys_low:
                ids_low.append(len(coords))
                coords.append((x, y))
            if y_hi > y_lo:
                ids_up = []
                for y in ys_up:
                    ids_up.append(len(coords))
                    coords.append((x, y))
            else:
                ids_up = [ids_low[-1]]
                for y in ys_up[1:]:
                    ids_up.append(len(coords))
                    coords.append((x, y))
            low_cols.append(ids_low)
            up_cols.append(ids_up)
    else:
        prof = graded_profile(n_y, ratio)
        for x in stations:
            y_bot, y_top = _column_heights(x, circles, geom.d, "bumps")
            if y_top - y_bot <= 0:
                raise MeshError("spacer filaments choke the channel")
            ys = y_bot + prof * (y_top - y_bot)
            if np.any(np.diff(ys) <= 0):
                raise MeshError("polygonization produced a self-intersecting column")
            ids = []
            for y in ys:
                ids.append(len(coords))
                coords.append((x, y))
            low_cols.append(ids)

    xy = np.array(coords)
    cells = []
    for s in range(len(stations) - 1):
        _triangulate_column_strip(xy, low_cols[s], low_cols[s + 1], cells)
        if submerged:
            _triangulate_column_strip(xy, up_cols[s], up_cols[s + 1], cells)
    cells = np.array(cells, dtype=np.int64)

    boundary_codes = _boundary_edge_codes(cells, len(xy))
    cells = delaunay_flips(xy, cells, frozen_codes=boundary_codes)
    xy = smooth_mesh(xy, cells, protected=_boundary_vertex_mask(cells, len(xy)))
    cells = delaunay_flips(xy, cells, frozen_codes=boundary_codes)

    mesh = Mesh(xy, cells, classifier=_spacer_classifier(geom))
    expected_holes = len(circles) if submerged else 0
    chi = mesh.n_vertices - mesh.n_edges + mesh.n_cells
    if chi != 1 - expected_holes:
        raise MeshError(
            f"unexpected topology: Euler characteristic {chi}, "
            f"expected {1 - expected_holes}"
        )
    return mesh


def _boundary_edge_codes(cells, nv):
    pairs = cells[:, [[1, 2], [2, 0], [0, 1]]]
    lo = pairs.min(axis=2).ravel()
    hi = pairs.max(axis=2).ravel()
    codes = lo * nv + hi
    ucodes, counts = np.unique(codes, return_counts=True)
    return set(ucodes[counts == 1].tolist())


def _boundary_vertex_mask(cells, nv):
    mask = np.zeros(nv, dtype=bool)
    codes = _boundary_edge_codes(cells, nv)
    for c in codes:
        mask[c // nv] = True
        mask[c % nv] = True
    return mask


def _in_circumcircle(pa, pb, pc, pd, eps):
    adx, ady = pa[0] - pd[0], pa[1] - pd[1]
    bdx, bdy = pb[0] - pd[0], pb[1] - pd[1]
    cdx, cdy = pc[0] - pd[0], pc[1] - pd[1]
    det = (
        (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
        + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady)
    )
    return det > eps


def delaunay_flips(xy, cells, frozen_codes=None, max_flips=None):
    """Lawson flips to the constrained Delaunay triangulation of the point set.

    ``frozen_codes`` holds encoded vertex pairs that must stay edges
    (boundary and other constraint edges).  Deterministic: the queue is
    seeded in sorted edge order.
    """
    nv = len(xy)
    frozen = frozen_codes or set()
    cells = np.array(cells, dtype=np.int64)
    if max_flips is None:
        max_flips = 30 * len(cells)

    edge_map = {}

    def register(ci):
        t = cells[ci]
        for k in range(3):
            a, b = t[(k + 1) % 3], t[(k + 2) % 3]
            code = min(a, b) * nv + max(a, b)
            edge_map.setdefault(code, {})[ci] = k

    def unregister(ci):
        t = cells[ci]
        for k in range(3):
            a, b = t[(k + 1) % 3], t[(k + 2) % 3]
            code = min(a, b) * nv + max(a, b)
            entry = edge_map.get(code)
            if entry is not None:
                entry.pop(ci, None)
                if not entry:
                    del edge_map[code]

    for ci in range(len(cells)):
        register(ci)

    scale = max(np.ptp(xy[:, 0]), np.ptp(xy[:, 1]))
    queue = deque(sorted(c for c in edge_map if c not in frozen))
    queued = set(queue)
    flips = 0
    while queue and flips < max_flips:
        code = queue.popleft()
        queued.discard(code)
        entry = edge_map.get(code)
        if entry is None or len(entry) != 2:
            continue
        (c1, l1), (c2, l2) = entry.items()
        t1, t2 = cells[c1], cells[c2]
        copp, dopp = t1[l1], t2[l2]
        a1, b1 = t1[(l1 + 1) % 3], t1[(l1 + 2) % 3]
        quad = xy[[a1, b1, copp, dopp]]
        qscale = max(np.ptp(quad[:, 0]), np.ptp(quad[:, 1]), 1e-6 * scale)
        eps = 1e-12 * qscale**4
        if not _in_circumcircle(xy[copp], xy[a1], xy[b1], xy[dopp], eps):
            continue
        new1 = (copp, a1, dopp)
        new2 = (dopp, b1, copp)
        area_eps = 1e-12 * qscale**2
        if (
            _cross2(xy[new1[1]] - xy[new1[0]], xy[new1[2]] - xy[new1[0]])
            <= area_eps
            or _cross2(xy[new2[1]] - xy[new2[0]], xy[new2[2]] - xy[new2[0]])
            <= area_eps
        ):
            continue
        unregister(c1)
        unregister(c2)
        cells[c1] = new1
        cells[c2] = new2
        register(c1)
        register(c2)
        flips += 1
        for va, vb in ((copp, a1), (a1, dopp), (dopp, b1), (b1, copp)):
            ncode = min(va, vb) * nv + max(va, vb)
            if ncode not in frozen and ncode not in queued and ncode in edge_map:
                queue.append(ncode)
                queued.add(ncode)
    return cells


def smooth_mesh(
    xy,
    cells,
    protected,
    iters=2,
    lam=0.5,
    aspect_trigger=25.0,
    angle_trigger_deg=12.0,
):
    """Laplacian smoothing restricted to interior vertices of badly shaped
    cells; moves that would invert a cell are reverted."""
    xy = np.array(xy, dtype=float)
    nv = len(xy)
    ea = np.concatenate([cells[:, 0], cells[:, 1], cells[:, 2]])
    eb = np.concatenate([cells[:, 1], cells[:, 2], cells[:, 0]])
    for _ in range(iters):
        _, aspect, min_angle = _quality_arrays(xy, cells)
        bad = (aspect > aspect_trigger) | (min_angle < angle_trigger_deg)
        if not bad.any():
            break
        movable = np.zeros(nv, dtype=bool)
        movable[cells[bad].ravel()] = True
        movable &= ~protected
        if not movable.any():
            break
        acc = np.zeros((nv, 2))
        cnt = np.zeros(nv)
        np.add.at(acc, ea, xy[eb])
        np.add.at(acc, eb, xy[ea])
        np.add.at(cnt, ea, 1.0)
        np.add.at(cnt, eb, 1.0)
        target = acc / np.maximum(cnt, 1.0)[:, None]
        old = xy.copy()
        xy[movable] = (1.0 - lam) * xy[movable] + lam * target[movable]
        p = xy[cells]
        bad_area = _cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]) <= 0
        if bad_area.any():
            revert = np.zeros(nv, dtype=bool)
            revert[cells[bad_area].ravel()] = True
            xy[revert] = old[revert]
            p = xy[cells]
            if np.any(_cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]) <= 0):
                return old
    return xy
