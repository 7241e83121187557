"""Legacy ASCII VTK output of fields on the triangulated square.

One file per snapshot: an unstructured grid of the mesh triangles with
every field attached as point data at the mesh vertices.  Higher-order
fields are represented by their vertex values (the enrichment and edge
contributions vanish there), which is what a surface plot of the field
shows anyway.  The legacy text format is written byte-for-byte
deterministically so repeated runs produce identical files.
"""

import numpy as np


def vertex_sample(space, coeffs):
    """Field values at the mesh vertices.

    Works for every element family here because local dofs 0..2 of a
    cell are its vertices; on x-periodic meshes the identified vertices
    on the right edge receive their shared dof value.

    Returns
    -------
    ndarray of shape (n_vertices,) for scalar spaces, else
    (n_vertices, 2).
    """
    mesh = space.mesh
    coeffs = np.asarray(coeffs, dtype=float)
    vdof = np.empty(mesh.n_vertices, dtype=np.int64)
    vdof[mesh.cells[:, :3].ravel()] = space.cell_dofs[:, :3].ravel()
    if space.components == 1:
        return coeffs[vdof]
    return np.stack([coeffs[vdof], coeffs[space.n_scalar + vdof]], axis=1)


def write_vtk(mesh, fields, path, title="tpmhd snapshot"):
    """Write mesh and fields as a legacy ASCII VTK unstructured grid.

    Parameters
    ----------
    mesh : Mesh
    fields : dict
        Maps a field name (no whitespace) to (space, coeffs); scalar
        spaces become SCALARS records, two-component spaces VECTORS.
    path : str or pathlib.Path
    title : str
        Second header line of the file.
    """
    lines = ["# vtk DataFile Version 3.0", title, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    for x, y in mesh.vertices:
        lines.append(f"{x:.9e} {y:.9e} 0.0")
    lines.append(f"CELLS {mesh.n_cells} {4 * mesh.n_cells}")
    for a, b, c in mesh.cells:
        lines.append(f"3 {a} {b} {c}")
    lines.append(f"CELL_TYPES {mesh.n_cells}")
    lines.extend(["5"] * mesh.n_cells)
    lines.append(f"POINT_DATA {mesh.n_vertices}")
    for name, (space, coeffs) in fields.items():
        if any(ch.isspace() for ch in name):
            raise ValueError(f"field name {name!r} contains whitespace")
        data = vertex_sample(space, coeffs)
        if data.ndim == 1:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(f"{v:.9e}" for v in data)
        else:
            lines.append(f"VECTORS {name} double")
            lines.extend(f"{vx:.9e} {vy:.9e} 0.0" for vx, vy in data)
    with open(path, "w", encoding="ascii", newline="\n") as handle:
        handle.write("\n".join(lines))
        handle.write("\n")
