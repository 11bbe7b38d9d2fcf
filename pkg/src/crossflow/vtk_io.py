"""Legacy VTK ASCII unstructured-grid export of converged fields.

The quadratic velocity is down-sampled to the mesh vertices.  Floats are
written with round-trip precision and the title line carries the scalar
ranges, so re-reading a written file reproduces the vertex data bit-exactly
and the output is deterministic for fixed inputs.
"""

import numpy as np

from .mesh import Mesh
from .solver import SolutionFields


def export_vtk(fields: SolutionFields, mesh: Mesh, path):
    path = str(path)
    nv = mesh.n_vertices
    p = fields.pressure
    th = fields.theta
    title = (
        f"crossflow fields p:[{float(p.min())!r},{float(p.max())!r}] "
        f"theta:[{float(th.min())!r},{float(th.max())!r}]"
    )
    lines = ["# vtk DataFile Version 2.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {nv} double")
    for x, y in mesh.vertices:
        lines.append(f"{float(x)!r} {float(y)!r} 0.0")
    nc = mesh.n_cells
    lines.append(f"CELLS {nc} {4 * nc}")
    for a, b, c in mesh.cells:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {nc}")
    lines.extend(["5"] * nc)
    lines.append(f"POINT_DATA {nv}")
    lines.append("VECTORS velocity double")
    for ux, uy in fields.velocity[:nv]:
        lines.append(f"{float(ux)!r} {float(uy)!r} 0.0")
    lines.append("SCALARS pressure double 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(f"{float(v)!r}" for v in p)
    lines.append("SCALARS concentration double 1")
    lines.append("LOOKUP_TABLE default")
    lines.extend(f"{float(v)!r}" for v in th)
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc


def read_vtk(path):
    """Read back a file written by :func:`export_vtk`.

    Returns (points (n,2), cells (m,3), point_data dict, title)."""
    path = str(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 5 or not lines[0].startswith("# vtk DataFile"):
        raise ValueError(f"{path}: not a legacy VTK file")
    title = lines[1]
    i = lines.index("DATASET UNSTRUCTURED_GRID") + 1
    tokens = lines[i].split()
    nv = int(tokens[1])
    pts = np.array([[float(v) for v in lines[i + 1 + k].split()] for k in range(nv)])
    i += 1 + nv
    nc = int(lines[i].split()[1])
    cells = np.array(
        [[int(v) for v in lines[i + 1 + k].split()[1:]] for k in range(nc)]
    )
    i += 1 + nc
    assert lines[i].startswith("CELL_TYPES")
    i += 1 + nc
    assert lines[i].startswith("POINT_DATA")
    i += 1
    data = {}
    while i < len(lines):
        head = lines[i].split()
        if head[0] == "VECTORS":
            vals = np.array(
                [[float(v) for v in lines[i + 1 + k].split()] for k in range(nv)]
            )
            data[head[1]] = vals[:, :2]
            i += 1 + nv
        elif head[0] == "SCALARS":
            vals = np.array([float(lines[i + 2 + k]) for k in range(nv)])
            data[head[1]] = vals
            i += 2 + nv
        else:
            raise ValueError(f"{path}: unexpected point-data block {head[0]}")
    return pts[:, :2], cells, data, title
