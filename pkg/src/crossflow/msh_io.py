"""Gmsh MSH v2 ASCII import/export (2-node boundary lines + 3-node triangles).

Boundary lines carry the physical tags 1=inlet, 2=outlet, 3=membrane, 4=wall.
Unknown sections are skipped; anything malformed inside the supported
sections raises :class:`MshParseError` with the offending line number.
"""

import numpy as np

from .mesh import BoundaryTag, Mesh, MeshError

_ELEMENT_NAMES = {
    3: "4-node quadrangle",
    4: "4-node tetrahedron",
    5: "8-node hexahedron",
    8: "3-node second order line",
    9: "6-node second order triangle",
    15: "1-node point",
}


class MshParseError(RuntimeError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


def read_msh(path) -> Mesh:
    path = str(path)
    with open(path, "r") as fh:
        lines = fh.read().splitlines()

    nodes = {}
    node_order = []
    tri_nodes = []
    tagged_lines = []

    i = 0
    n = len(lines)
    while i < n:
        header = lines[i].strip()
        if not header.startswith("$"):
            i += 1
            continue
        section = header[1:]
        if section == "MeshFormat":
            if i + 1 >= n:
                raise MshParseError(path, i + 1, "truncated $MeshFormat section")
            parts = lines[i + 1].split()
            if not parts or not parts[0].startswith("2"):
                raise MshParseError(
                    path, i + 2, f"unsupported MSH version {parts[0] if parts else '?'}"
                )
            i = _section_end(path, lines, i, "MeshFormat")
        elif section == "Nodes":
            i = _parse_nodes(path, lines, i, nodes, node_order)
        elif section == "Elements":
            i = _parse_elements(path, lines, i, tri_nodes, tagged_lines)
        else:
            i = _section_end(path, lines, i, section)

    if not nodes:
        raise MshParseError(path, n, "no $Nodes section found")
    if not tri_nodes:
        raise MshParseError(path, n, "no triangles found in $Elements")

    id_map = {nid: k for k, nid in enumerate(node_order)}
    xy = np.array([nodes[nid] for nid in node_order])
    try:
        cells = np.array(
            [[id_map[a] for a in tri] for tri in tri_nodes], dtype=np.int64
        )
        edge_tag_map = {}
        for a, b, tag, line_no in tagged_lines:
            key = (min(id_map[a], id_map[b]), max(id_map[a], id_map[b]))
            edge_tag_map[key] = tag
    except KeyError as exc:
        raise MshParseError(path, 0, f"element references unknown node {exc}") from exc

    try:
        mesh = Mesh(xy, cells, edge_tag_map=edge_tag_map)
    except MeshError as exc:
        raise MshParseError(path, 0, str(exc)) from exc

    # Every tagged line must be an actual boundary edge of the triangulation.
    bset = {
        (min(a, b), max(a, b))
        for a, b in mesh.boundary_edges
    }
    for a, b, tag, line_no in tagged_lines:
        key = (min(id_map[a], id_map[b]), max(id_map[a], id_map[b]))
        if key not in bset:
            raise MshParseError(
                path, line_no, f"tagged line ({a}, {b}) is not a boundary edge"
            )
    return mesh


def _section_end(path, lines, i, name):
    end = f"$End{name}"
    for j in range(i + 1, len(lines)):
        if lines[j].strip() == end:
            return j + 1
    raise MshParseError(path, i + 1, f"missing {end}")


def _parse_nodes(path, lines, i, nodes, node_order):
    if i + 1 >= len(lines):
        raise MshParseError(path, i + 1, "truncated $Nodes section")
    try:
        count = int(lines[i + 1].split()[0])
    except (ValueError, IndexError):
        raise MshParseError(path, i + 2, "malformed node count")
    row = i + 2
    for k in range(count):
        if row + k >= len(lines):
            raise MshParseError(path, row + k + 1, "unexpected end of $Nodes")
        parts = lines[row + k].split()
        if len(parts) < 4:
            raise MshParseError(
                path, row + k + 1, f"malformed node line (expected 'id x y z')"
            )
        try:
            nid = int(parts[0])
            x, y, z = float(parts[1]), float(parts[2]), float(parts[3])
        except ValueError:
            raise MshParseError(path, row + k + 1, "malformed node coordinates")
        if abs(z) > 1e-12:
            raise MshParseError(
                path, row + k + 1, f"node {nid} has nonzero z coordinate {z}"
            )
        if nid in nodes:
            raise MshParseError(path, row + k + 1, f"duplicate node id {nid}")
        nodes[nid] = (x, y)
        node_order.append(nid)
    endline = row + count
    if endline >= len(lines) or lines[endline].strip() != "$EndNodes":
        raise MshParseError(path, endline + 1, "expected $EndNodes")
    return endline + 1


def _parse_elements(path, lines, i, tri_nodes, tagged_lines):
    if i + 1 >= len(lines):
        raise MshParseError(path, i + 1, "truncated $Elements section")
    try:
        count = int(lines[i + 1].split()[0])
    except (ValueError, IndexError):
        raise MshParseError(path, i + 2, "malformed element count")
    row = i + 2
    for k in range(count):
        line_no = row + k + 1
        if row + k >= len(lines):
            raise MshParseError(path, line_no, "unexpected end of $Elements")
        parts = lines[row + k].split()
        if len(parts) < 3:
            raise MshParseError(path, line_no, "malformed element line")
        try:
            etype = int(parts[1])
            ntags = int(parts[2])
            tags = [int(t) for t in parts[3 : 3 + ntags]]
            conn = [int(v) for v in parts[3 + ntags :]]
        except ValueError:
            raise MshParseError(path, line_no, "malformed element record")
        if etype == 1:
            if len(conn) != 2:
                raise MshParseError(path, line_no, "2-node line with wrong node count")
            if not tags:
                raise MshParseError(path, line_no, "boundary line carries no tag")
            tag = tags[0]
            if tag not in (1, 2, 3, 4):
                raise MshParseError(
                    path,
                    line_no,
                    f"physical tag {tag} is not one of inlet=1, outlet=2, "
                    "membrane=3, wall=4",
                )
            tagged_lines.append((conn[0], conn[1], tag, line_no))
        elif etype == 2:
            if len(conn) != 3:
                raise MshParseError(path, line_no, "triangle with wrong node count")
            tri_nodes.append(conn)
        else:
            name = _ELEMENT_NAMES.get(etype, f"type {etype}")
            raise MshParseError(
                path, line_no, f"unsupported element type {etype} ({name})"
            )
    endline = row + count
    if endline >= len(lines) or lines[endline].strip() != "$EndElements":
        raise MshParseError(path, endline + 1, "expected $EndElements")
    return endline + 1


def write_msh(mesh: Mesh, path):
    """Write the mesh in the same MSH v2 ASCII subset the reader accepts."""
    path = str(path)
    out = []
    out.append("$MeshFormat")
    out.append("2.2 0 8")
    out.append("$EndMeshFormat")
    out.append("$PhysicalNames")
    out.append("4")
    for tag in BoundaryTag:
        out.append(f'1 {int(tag)} "{tag.name.lower()}"')
    out.append("$EndPhysicalNames")
    out.append("$Nodes")
    out.append(str(mesh.n_vertices))
    for k, (x, y) in enumerate(mesh.vertices, start=1):
        out.append(f"{k} {float(x)!r} {float(y)!r} 0")
    out.append("$EndNodes")
    out.append("$Elements")
    out.append(str(len(mesh.boundary_edges) + mesh.n_cells))
    eid = 1
    for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        out.append(f"{eid} 1 2 {int(tag)} {int(tag)} {a + 1} {b + 1}")
        eid += 1
    for va, vb, vc in mesh.cells:
        out.append(f"{eid} 2 2 0 0 {va + 1} {vb + 1} {vc + 1}")
        eid += 1
    out.append("$EndElements")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
