"""Reference elements, quadrature, and degree-of-freedom management.

Three nodal families on triangles are provided: P1, P2, and P1 enriched
with the cubic bubble (the velocity half of the MINI pair).  A single
positive-weight quadrature rule of polynomial exactness 8 is used for
all assembly so that the algebraic identities of the time stepping
scheme (skew symmetry, adjoint coupling pairs, exact mass transport)
hold to rounding rather than to quadrature error.

Vector spaces store their unknowns component-blocked: all component-0
coefficients first, then all component-1 coefficients.  Periodicity in
x is realized by merging the right-side degrees of freedom into their
left-side partners when the space is built, so assembly and solvers
never see the identification.
"""

import numpy as np

from .mesh import TAGS

P1 = "P1"
P2 = "P2"
P1_BUBBLE = "P1b"

_N_LOCAL = {P1: 3, P2: 6, P1_BUBBLE: 4}

#: Local edges of the reference triangle, matching mesh.cell_edges order.
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


class QuadratureRule:
    """Positive-weight rule on the reference triangle (0,0),(1,0),(0,1).

    Attributes
    ----------
    degree : int
        Total polynomial degree integrated exactly.
    points : ndarray, shape (nq, 2)
    weights : ndarray, shape (nq,)
        Reference-measure weights, summing to 1/2.
    """

    def __init__(self, degree, points, weights):
        self.degree = degree
        self.points = points
        self.weights = weights
        points.setflags(write=False)
        weights.setflags(write=False)

    @property
    def n_points(self):
        return self.weights.shape[0]


def quadrature_rule(degree):
    """Collapsed tensor Gauss rule exact for total degree <= degree.

    The unit square is mapped onto the triangle by (s, t) -> (s, t(1-s)).
    The Jacobian factor (1-s) raises the s-degree by one, hence the
    one-extra-point choice below.  All weights are strictly positive,
    which the convex-splitting energy argument relies on.
    """
    if not 1 <= degree <= 10:
        raise ValueError("quadrature degree must be between 1 and 10")
    k = (degree + 3) // 2
    nodes, w = np.polynomial.legendre.leggauss(k)
    s = 0.5 * (nodes + 1.0)
    ws = 0.5 * w
    xs = np.repeat(s, k)
    ys = np.tile(s, k) * (1.0 - xs)
    wts = np.repeat(ws, k) * np.tile(ws, k) * (1.0 - xs)
    return QuadratureRule(degree, np.column_stack([xs, ys]), wts)


def n_local(family):
    return _N_LOCAL[family]


def eval_basis(family, points):
    """Shape function values and reference gradients at given points.

    Parameters
    ----------
    family : str
        One of P1, P2, P1_BUBBLE.
    points : ndarray, shape (nq, 2)
        Reference coordinates.

    Returns
    -------
    values : ndarray, shape (nq, nloc)
    grads : ndarray, shape (nq, nloc, 2)
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = points[:, 0], points[:, 1]
    lam = np.column_stack([1.0 - x - y, x, y])
    dlam = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    nq = points.shape[0]

    if family == P1:
        vals = lam.copy()
        grads = np.broadcast_to(dlam, (nq, 3, 2)).copy()
        return vals, grads

    if family == P1_BUBBLE:
        vals = np.empty((nq, 4))
        grads = np.empty((nq, 4, 2))
        vals[:, :3] = lam
        grads[:, :3] = dlam
        vals[:, 3] = 27.0 * lam[:, 0] * lam[:, 1] * lam[:, 2]
        grads[:, 3] = 27.0 * (
            np.outer(lam[:, 1] * lam[:, 2], dlam[0])
            + np.outer(lam[:, 0] * lam[:, 2], dlam[1])
            + np.outer(lam[:, 0] * lam[:, 1], dlam[2]))
        return vals, grads

    if family == P2:
        vals = np.empty((nq, 6))
        grads = np.empty((nq, 6, 2))
        for i in range(3):
            vals[:, i] = lam[:, i] * (2.0 * lam[:, i] - 1.0)
            grads[:, i] = np.outer(4.0 * lam[:, i] - 1.0, dlam[i])
        for k, (a, b) in enumerate(LOCAL_EDGES):
            vals[:, 3 + k] = 4.0 * lam[:, a] * lam[:, b]
            grads[:, 3 + k] = 4.0 * (np.outer(lam[:, a], dlam[b])
                                     + np.outer(lam[:, b], dlam[a]))
        return vals, grads

    raise ValueError(f"unknown element family {family!r}")


class Tabulation:
    """Per-cell data for one (space, rule) pairing.

    Attributes
    ----------
    values : ndarray, shape (nq, nloc)
        Reference shape values (cell independent for affine maps).
    grads : ndarray, shape (nc, nq, nloc, 2)
        Physical gradients.
    det : ndarray, shape (nc,)
        Jacobian determinants (twice the cell areas).
    points : ndarray, shape (nc, nq, 2)
        Quadrature points mapped into each cell.
    weights : ndarray, shape (nq,)
    """

    def __init__(self, values, grads, det, points, weights):
        self.values = values
        self.grads = grads
        self.det = det
        self.points = points
        self.weights = weights


class FeSpace:
    """Scalar or vector finite element space over a mesh.

    Attributes
    ----------
    mesh : Mesh
    family : str
    components : int
    constraint : str
        "none" or "zero_mean"; the latter is enforced by the solver
        through a Lagrange multiplier, not here.
    n_scalar : int
        Scalar degrees of freedom per component, after periodic merging.
    n_dofs : int
        components * n_scalar.
    cell_dofs : ndarray, shape (nc, nloc)
        Scalar dof indices per cell.
    dof_coords : ndarray, shape (n_scalar, 2)
        Nodal coordinate of each scalar dof (cell centroid for bubbles;
        bubbles carry no nodal value and interpolation sets them to 0).
    """

    def __init__(self, mesh, family, components=1, constraint="none"):
        if family not in _N_LOCAL:
            raise ValueError(f"unknown element family {family!r}")
        if components not in (1, 2):
            raise ValueError("components must be 1 or 2")
        if constraint not in ("none", "zero_mean"):
            raise ValueError(f"unknown constraint {constraint!r}")
        self.mesh = mesh
        self.family = family
        self.components = components
        self.constraint = constraint

        nv = mesh.n_vertices
        base_cell_dofs = mesh.cells.copy()
        if family == P2:
            base_cell_dofs = np.hstack([mesh.cells, nv + mesh.cell_edges])
            n_base = nv + mesh.n_edges
            base_coords = np.vstack([
                mesh.vertices,
                0.5 * (mesh.vertices[mesh.edges[:, 0]]
                       + mesh.vertices[mesh.edges[:, 1]])])
        elif family == P1_BUBBLE:
            cell_ids = np.arange(mesh.n_cells, dtype=np.int64)
            base_cell_dofs = np.hstack([mesh.cells, (nv + cell_ids)[:, None]])
            n_base = nv + mesh.n_cells
            base_coords = np.vstack([
                mesh.vertices,
                mesh.vertices[mesh.cells].mean(axis=1)])
        else:
            n_base = nv
            base_coords = mesh.vertices.copy()

        # periodic merging: right-side dofs take their left partner's id
        parent = np.arange(n_base, dtype=np.int64)
        if mesh.periodic_x:
            for left, right in mesh.periodic_vertex_pairs:
                parent[right] = left
            if family == P2:
                for eleft, eright in mesh.periodic_edge_pairs:
                    parent[nv + eright] = nv + eleft
        keep = parent == np.arange(n_base)
        new_id = np.cumsum(keep) - 1
        renum = new_id[parent]

        self.n_scalar = int(keep.sum())
        self.n_dofs = components * self.n_scalar
        self.cell_dofs = renum[base_cell_dofs]
        self.dof_coords = base_coords[keep]
        self.dof_coords.setflags(write=False)
        self.cell_dofs.setflags(write=False)

        self._boundary = {}
        for tag in TAGS:
            dofs = set(mesh.boundary_vertices(tag))
            if family == P2:
                dofs.update(nv + e for e in mesh.boundary_edge_ids(tag))
            self._boundary[tag] = np.array(sorted(renum[d] for d in dofs),
                                           dtype=np.int64)
        self._tab_cache = {}

    def boundary_scalar_dofs(self, tag):
        """Scalar dofs whose basis functions are nonzero on the side."""
        return self._boundary[tag]

    def boundary_component_dofs(self, tag, component):
        """Global dof indices for one component along one side."""
        return component * self.n_scalar + self._boundary[tag]

    def component_dofs(self, cell_dofs_row, component):
        return component * self.n_scalar + cell_dofs_row

    def tabulation(self, rule):
        """Values, physical gradients, and geometry at the rule's points."""
        key = (rule.degree, rule.n_points)
        tab = self._tab_cache.get(key)
        if tab is None:
            vals, gref = eval_basis(self.family, rule.points)
            mesh = self.mesh
            pts = mesh.vertices[mesh.cells]
            jac = np.stack([pts[:, 1] - pts[:, 0],
                            pts[:, 2] - pts[:, 0]], axis=2)
            det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
            jinv = np.empty_like(jac)
            jinv[:, 0, 0] = jac[:, 1, 1]
            jinv[:, 0, 1] = -jac[:, 0, 1]
            jinv[:, 1, 0] = -jac[:, 1, 0]
            jinv[:, 1, 1] = jac[:, 0, 0]
            jinv /= det[:, None, None]
            grads = np.einsum("cad,qla->cqld", jinv, gref)
            phys = pts[:, None, 0, :] + np.einsum(
                "cda,qa->cqd", jac, rule.points)
            tab = Tabulation(vals, grads, det, phys, rule.weights)
            self._tab_cache[key] = tab
        return tab


def make_space(mesh, family, components=1, constraint="none"):
    """Build a finite element space; see FeSpace for the layout."""
    return FeSpace(mesh, family, components, constraint)


def interpolate(space, fn, t=0.0):
    """Nodal interpolant of an analytic function.

    Parameters
    ----------
    space : FeSpace
    fn : callable
        Scalar space: fn(x, y, t) -> values.  Vector space: fn(x, y, t)
        -> (values_x, values_y).  Must accept numpy arrays.
    t : float

    Returns
    -------
    ndarray, shape (n_dofs,)
        Bubble coefficients are set to zero; P1/P2 nodal values are
        exact at vertices and edge midpoints.
    """
    x = space.dof_coords[:, 0]
    y = space.dof_coords[:, 1]
    out = np.zeros(space.n_dofs)
    nodal = _nodal_mask(space)
    if space.components == 1:
        vals = np.broadcast_to(np.asarray(fn(x, y, t), dtype=float), x.shape)
        out[:space.n_scalar][nodal] = vals[nodal]
    else:
        vx, vy = fn(x, y, t)
        vx = np.broadcast_to(np.asarray(vx, dtype=float), x.shape)
        vy = np.broadcast_to(np.asarray(vy, dtype=float), x.shape)
        out[:space.n_scalar][nodal] = vx[nodal]
        out[space.n_scalar:][nodal] = vy[nodal]
    return out


def _nodal_mask(space):
    """True for dofs that carry point values (everything but bubbles)."""
    mask = np.ones(space.n_scalar, dtype=bool)
    if space.family == P1_BUBBLE:
        bubbles = np.unique(space.cell_dofs[:, 3])
        mask[bubbles] = False
    return mask
