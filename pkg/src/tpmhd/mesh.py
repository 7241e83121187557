"""Structured triangular meshes of the unit square.

Every mesh is a uniform n-by-n grid of subsquares, each split along its
bottom-left to top-right diagonal into two counterclockwise triangles.
The construction is fully deterministic so that repeated runs produce
identical meshes, identical assembly order, and identical output files.
"""

import numpy as np

BOTTOM = "bottom"
RIGHT = "right"
TOP = "top"
LEFT = "left"

#: Boundary tags in the fixed order used for deterministic iteration.
TAGS = (BOTTOM, RIGHT, TOP, LEFT)


class Mesh:
    """Immutable triangulation of [0,1]^2.

    Attributes
    ----------
    vertices : ndarray, shape (nv, 2)
        Vertex coordinates.
    cells : ndarray, shape (nc, 3)
        Vertex indices of each triangle, counterclockwise.
    edges : ndarray, shape (ne, 2)
        Vertex index pairs, each sorted ascending.
    cell_edges : ndarray, shape (nc, 3)
        Global edge index of the local edges (0,1), (1,2), (2,0).
    boundary_edges : list of (edge index, tag)
        Edges lying on the boundary, tagged by side.
    periodic_x : bool
        Whether the left and right sides are identified.
    periodic_vertex_pairs : ndarray, shape (np, 2)
        Pairs (left vertex id, right vertex id), empty if not periodic.
    periodic_edge_pairs : ndarray, shape (np, 2)
        Pairs (left edge id, right edge id), empty if not periodic.
    """

    def __init__(self, vertices, cells, edges, cell_edges, boundary_edges,
                 periodic_x, periodic_vertex_pairs, periodic_edge_pairs, n):
        self.vertices = vertices
        self.cells = cells
        self.edges = edges
        self.cell_edges = cell_edges
        self.boundary_edges = boundary_edges
        self.periodic_x = periodic_x
        self.periodic_vertex_pairs = periodic_vertex_pairs
        self.periodic_edge_pairs = periodic_edge_pairs
        self.n = n
        for arr in (vertices, cells, edges, cell_edges,
                    periodic_vertex_pairs, periodic_edge_pairs):
            arr.setflags(write=False)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def cell_coords(self, c):
        """Coordinates of the three vertices of cell c, shape (3, 2)."""
        return self.vertices[self.cells[c]]

    def boundary_vertices(self, tag):
        """Sorted vertex ids lying on the side named by tag."""
        out = set()
        for e, t in self.boundary_edges:
            if t == tag:
                out.update(self.edges[e])
        return sorted(out)

    def boundary_edge_ids(self, tag):
        """Sorted edge ids lying on the side named by tag."""
        return sorted(e for e, t in self.boundary_edges if t == tag)


def build_structured_mesh(n, periodic_x=False):
    """Build the uniform triangulation with n cells per side.

    Parameters
    ----------
    n : int
        Number of subsquares per side, at least 1.
    periodic_x : bool
        If True, record the left/right vertex and edge identifications
        used later for periodic degree-of-freedom merging.

    Returns
    -------
    Mesh
    """
    if n < 1:
        raise ValueError("mesh resolution n must be at least 1")
    n = int(n)

    side = np.linspace(0.0, 1.0, n + 1)
    xx, yy = np.meshgrid(side, side)
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(ix, iy):
        return iy * (n + 1) + ix

    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    k = 0
    for iy in range(n):
        for ix in range(n):
            a = vid(ix, iy)
            b = vid(ix + 1, iy)
            c = vid(ix + 1, iy + 1)
            d = vid(ix, iy + 1)
            cells[k] = (a, b, c)
            cells[k + 1] = (a, c, d)
            k += 2

    edge_index = {}
    edge_list = []
    cell_edges = np.empty((cells.shape[0], 3), dtype=np.int64)
    edge_cell_count = {}
    for c, tri in enumerate(cells):
        for loc, (i, j) in enumerate(((0, 1), (1, 2), (2, 0))):
            key = (min(tri[i], tri[j]), max(tri[i], tri[j]))
            if key not in edge_index:
                edge_index[key] = len(edge_list)
                edge_list.append(key)
            e = edge_index[key]
            cell_edges[c, loc] = e
            edge_cell_count[e] = edge_cell_count.get(e, 0) + 1
    edges = np.array(edge_list, dtype=np.int64)

    tol = 0.5 / n
    boundary_edges = []
    for e, (va, vb) in enumerate(edges):
        if edge_cell_count[e] != 1:
            continue
        mx, my = 0.5 * (vertices[va] + vertices[vb])
        if my < tol:
            tag = BOTTOM
        elif mx > 1.0 - tol:
            tag = RIGHT
        elif my > 1.0 - tol:
            tag = TOP
        else:
            tag = LEFT
        boundary_edges.append((e, tag))

    if periodic_x:
        vpairs = np.array([(vid(0, iy), vid(n, iy)) for iy in range(n + 1)],
                          dtype=np.int64)
        left_edges = {}
        right_edges = {}
        for e, tag in boundary_edges:
            ymin = min(vertices[edges[e, 0], 1], vertices[edges[e, 1], 1])
            if tag == LEFT:
                left_edges[round(ymin * n)] = e
            elif tag == RIGHT:
                right_edges[round(ymin * n)] = e
        epairs = np.array([(left_edges[k], right_edges[k])
                           for k in sorted(left_edges)], dtype=np.int64)
    else:
        vpairs = np.empty((0, 2), dtype=np.int64)
        epairs = np.empty((0, 2), dtype=np.int64)

    return Mesh(vertices, cells, edges, cell_edges, boundary_edges,
                periodic_x, vpairs, epairs, n)


def mesh_size(mesh):
    """Maximum cell diameter h of the mesh."""
    pts = mesh.vertices[mesh.cells]
    d01 = np.linalg.norm(pts[:, 0] - pts[:, 1], axis=1)
    d12 = np.linalg.norm(pts[:, 1] - pts[:, 2], axis=1)
    d20 = np.linalg.norm(pts[:, 2] - pts[:, 0], axis=1)
    return float(np.max(np.column_stack([d01, d12, d20])))


def cell_areas(mesh):
    """Signed area of every cell, positive for counterclockwise cells."""
    pts = mesh.vertices[mesh.cells]
    v1 = pts[:, 1] - pts[:, 0]
    v2 = pts[:, 2] - pts[:, 0]
    return 0.5 * (v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0])
