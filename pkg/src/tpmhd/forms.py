"""Assembly of the bilinear, trilinear, and load forms of the scheme.

All operators are assembled with one shared quadrature rule of
polynomial exactness 8, the degree of the worst product integrand
(bubble times gradient times bubble in the convection form).  Exact
integration is what turns the scheme's structural identities into
machine-precision algebra: the convection form is exactly skew, the
phase-transport and Lorentz coupling pairs are exact transposes of
each other, and testing the phase equation with the constant function
reproduces mass conservation to rounding.

The 2D reductions used throughout: for vectors a, b and scalar s,
curl a = d1 a2 - d2 a1,  a x b = a1 b2 - a2 b1,  curl s = (d2 s, -d1 s).

Conventions: element matrices are computed cell-batched with einsum and
scattered into CSR triplets in deterministic cell order.  Vector spaces
are component-blocked, so vector operators are built from scalar-basis
blocks indexed by (row component, column component).
"""

from dataclasses import dataclass

import numpy as np

from .fespace import FeSpace, quadrature_rule
from .sparse import CsrMatrix, triplet_to_csr

#: Shared quadrature rule; degree 8 integrates every assembled product
#: of basis functions exactly on affine cells.
RULE = quadrature_rule(8)


@dataclass(frozen=True)
class SchemeParams:
    """Physical and numerical parameters of one run.

    lam is the capillary coefficient (lambda in the model; renamed
    because of the Python keyword).
    """
    gamma: float = 1.0
    mobility: float = 1.0
    nu: float = 1.0
    mu: float = 1.0
    lam: float = 1.0
    sigma: float = 1.0
    dt: float = 0.01
    T_final: float = 1.0
    newton_tol: float = 1e-10
    newton_max: int = 30
    lin_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        for name in ("gamma", "mobility", "nu", "mu", "lam", "sigma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"parameter {name} must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.T_final < self.dt:
            raise ValueError("T_final must be at least dt")


@dataclass
class AssembledOperator:
    """A sparse operator together with its row and column spaces."""
    matrix: CsrMatrix
    row_space: FeSpace
    col_space: FeSpace

    @property
    def scipy(self):
        return self.matrix.scipy


def _triplets(row_space, col_space, elem, row_comp=0, col_comp=0):
    """Scatter element matrices (nc, nl_row, nl_col) to triplet arrays."""
    rows = row_comp * row_space.n_scalar + row_space.cell_dofs
    cols = col_comp * col_space.n_scalar + col_space.cell_dofs
    nc, nlr = rows.shape
    nlc = cols.shape[1]
    r = np.broadcast_to(rows[:, :, None], (nc, nlr, nlc)).ravel()
    c = np.broadcast_to(cols[:, None, :], (nc, nlr, nlc)).ravel()
    return r, c, elem.ravel()


def _build(row_space, col_space, pieces):
    """Combine (rows, cols, vals) pieces into one AssembledOperator."""
    rows = np.concatenate([p[0] for p in pieces])
    cols = np.concatenate([p[1] for p in pieces])
    vals = np.concatenate([p[2] for p in pieces])
    mat = triplet_to_csr(row_space.n_dofs, col_space.n_dofs,
                         (rows, cols, vals))
    return AssembledOperator(mat, row_space, col_space)


def fe_values(space, coeffs, tab=None):
    """Field values at quadrature points.

    Returns (nc, nq) for scalar spaces, (nc, nq, 2) for vector spaces.
    """
    tab = tab or space.tabulation(RULE)
    if space.components == 1:
        return np.einsum("ql,cl->cq", tab.values, coeffs[space.cell_dofs])
    out = np.empty(tab.grads.shape[:2] + (2,))
    for d in range(2):
        cd = coeffs[d * space.n_scalar + space.cell_dofs]
        out[:, :, d] = np.einsum("ql,cl->cq", tab.values, cd)
    return out


def fe_gradients(space, coeffs, tab=None):
    """Field gradients at quadrature points.

    Returns (nc, nq, 2) for scalar spaces; (nc, nq, 2, 2) for vector
    spaces, indexed [cell, point, component, derivative].
    """
    tab = tab or space.tabulation(RULE)
    if space.components == 1:
        return np.einsum("cqld,cl->cqd", tab.grads, coeffs[space.cell_dofs])
    out = np.empty(tab.grads.shape[:2] + (2, 2))
    for d in range(2):
        cd = coeffs[d * space.n_scalar + space.cell_dofs]
        out[:, :, d, :] = np.einsum("cqld,cl->cqd", tab.grads, cd)
    return out


def assemble_mass(space, c=1.0):
    """Mass matrix with entries c * integral(phi_j phi_i)."""
    tab = space.tabulation(RULE)
    elem = c * np.einsum("q,c,ql,qm->clm", tab.weights, tab.det,
                         tab.values, tab.values)
    pieces = [_triplets(space, space, elem, d, d)
              for d in range(space.components)]
    return _build(space, space, pieces)


def assemble_stiffness(space, c=1.0):
    """Stiffness matrix with entries c * integral(grad phi_j . grad phi_i)."""
    tab = space.tabulation(RULE)
    elem = c * np.einsum("q,c,cqld,cqmd->clm", tab.weights, tab.det,
                         tab.grads, tab.grads)
    pieces = [_triplets(space, space, elem, d, d)
              for d in range(space.components)]
    return _build(space, space, pieces)


def assemble_div_coupling(velocity_space, pressure_space):
    """Entries integral(q_i * div v_j), rows pressure, columns velocity."""
    tabu = velocity_space.tabulation(RULE)
    tabp = pressure_space.tabulation(RULE)
    pieces = []
    for d in range(2):
        elem = np.einsum("q,c,qi,cqj->cij", tabp.weights, tabp.det,
                         tabp.values, tabu.grads[:, :, :, d])
        pieces.append(_triplets(pressure_space, velocity_space, elem, 0, d))
    return _build(pressure_space, velocity_space, pieces)


def assemble_convection(velocity_space, u_prev):
    """Skew trilinear form b(u_prev, ., .) on the velocity space.

    b(u, v, w) = 1/2 [ (u . grad v, w) - (u . grad w, v) ], so the
    matrix satisfies w^T N w = 0 exactly for every w.
    """
    tab = velocity_space.tabulation(RULE)
    w_at_q = fe_values(velocity_space, u_prev, tab)
    wg = np.einsum("cqd,cqld->cql", w_at_q, tab.grads)
    wg *= (tab.weights[None, :] * tab.det[:, None])[:, :, None]
    first = np.einsum("ql,cqm->clm", tab.values, wg, optimize=True)
    elem = 0.5 * (first - first.transpose(0, 2, 1))
    pieces = [_triplets(velocity_space, velocity_space, elem, d, d)
              for d in range(2)]
    return _build(velocity_space, velocity_space, pieces)


def assemble_phase_transport(scalar_space, velocity_space, phi_prev):
    """Coupling pair carried by grad(phi_prev).

    Returns (T_uphi, T_omegau): T_uphi maps velocity to the phase
    equation with entries integral((grad phi_prev . v_j) xi_i); T_omegau
    is its exact transpose, the capillary-force image in momentum.
    """
    tabs = scalar_space.tabulation(RULE)
    tabu = velocity_space.tabulation(RULE)
    gp = fe_gradients(scalar_space, phi_prev, tabs)
    wdet = tabs.weights[None, :] * tabs.det[:, None]
    pieces = []
    for d in range(2):
        elem = np.einsum("cq,qi,qj->cij", wdet * gp[:, :, d],
                         tabs.values, tabu.values, optimize=True)
        pieces.append(_triplets(scalar_space, velocity_space, elem, 0, d))
    t_uphi = _build(scalar_space, velocity_space, pieces)
    t_omegau = AssembledOperator(t_uphi.matrix.transpose(),
                                 velocity_space, scalar_space)
    return t_uphi, t_omegau


def assemble_lorentz(magnetic_space, velocity_space, b_prev, c=1.0):
    """Lorentz/induction coupling pair carried by b_prev.

    Returns (L_Bu, L_uB): L_Bu maps the magnetic field to momentum with
    entries c * integral(curl(zeta_j) * (v_i x b_prev)); L_uB is its
    exact transpose, used with a minus sign in the induction equation.
    The transpose relation is what cancels the two couplings in the
    discrete energy budget.
    """
    tabb = magnetic_space.tabulation(RULE)
    tabu = velocity_space.tabulation(RULE)
    bq = fe_values(magnetic_space, b_prev, tabb)
    # v x b_prev for a component-d velocity basis function
    vxb = np.empty(bq.shape[:2] + (2,))
    vxb[:, :, 0] = bq[:, :, 1]
    vxb[:, :, 1] = -bq[:, :, 0]
    # curl of a component-e magnetic basis function
    curl = np.empty(tabb.grads.shape[:3] + (2,))
    curl[:, :, :, 0] = -tabb.grads[:, :, :, 1]
    curl[:, :, :, 1] = tabb.grads[:, :, :, 0]
    wdet = tabu.weights[None, :] * tabu.det[:, None]
    pieces = []
    for d in range(2):
        weighted = (c * wdet) * vxb[:, :, d]
        for e in range(2):
            elem = np.einsum("cq,qi,cqj->cij", weighted, tabu.values,
                             curl[:, :, :, e], optimize=True)
            pieces.append(_triplets(velocity_space, magnetic_space,
                                    elem, d, e))
    l_bu = _build(velocity_space, magnetic_space, pieces)
    l_ub = AssembledOperator(l_bu.matrix.transpose(),
                             magnetic_space, velocity_space)
    return l_bu, l_ub


def assemble_curlcurl_divdiv(magnetic_space, c_curl=1.0, c_div=1.0):
    """c_curl (curl B_j, curl B_i) + c_div (div B_j, div B_i)."""
    tab = magnetic_space.tabulation(RULE)
    curl = np.empty(tab.grads.shape[:3] + (2,))
    curl[:, :, :, 0] = -tab.grads[:, :, :, 1]
    curl[:, :, :, 1] = tab.grads[:, :, :, 0]
    pieces = []
    for d in range(2):
        for e in range(2):
            elem = (c_curl * np.einsum("q,c,cqi,cqj->cij", tab.weights,
                                       tab.det, curl[:, :, :, d],
                                       curl[:, :, :, e])
                    + c_div * np.einsum("q,c,cqi,cqj->cij", tab.weights,
                                        tab.det, tab.grads[:, :, :, d],
                                        tab.grads[:, :, :, e]))
            pieces.append(_triplets(magnetic_space, magnetic_space,
                                    elem, d, e))
    return _build(magnetic_space, magnetic_space, pieces)


def cubic_term(scalar_space, phi_iter, phi_prev, c=1.0):
    """Convex-split nonlinearity and its Newton linearization.

    residual_i = c * integral((phi_iter^3 - phi_prev) psi_i)
    jacobian_ij = c * integral(3 phi_iter^2 psi_j psi_i)
    """
    tab = scalar_space.tabulation(RULE)
    pv = fe_values(scalar_space, phi_iter, tab)
    ppv = fe_values(scalar_space, phi_prev, tab)
    elem_r = c * np.einsum("q,c,cq,qi->ci", tab.weights, tab.det,
                           pv ** 3 - ppv, tab.values)
    residual = np.zeros(scalar_space.n_dofs)
    np.add.at(residual, scalar_space.cell_dofs, elem_r)
    elem_j = c * np.einsum("q,c,cq,qi,qj->cij", tab.weights, tab.det,
                           3.0 * pv ** 2, tab.values, tab.values)
    jac = _build(scalar_space, scalar_space,
                 [_triplets(scalar_space, scalar_space, elem_j)])
    return residual, jac


def cubic_jacobian_triplets(scalar_space, phi_iter, c=1.0):
    """Triplet form of the cubic Jacobian, for monolithic insertion."""
    tab = scalar_space.tabulation(RULE)
    pv = fe_values(scalar_space, phi_iter, tab)
    elem_j = c * np.einsum("q,c,cq,qi,qj->cij", tab.weights, tab.det,
                           3.0 * pv ** 2, tab.values, tab.values)
    return _triplets(scalar_space, scalar_space, elem_j)


def cubic_residual(scalar_space, phi_iter, phi_prev, c=1.0):
    """Residual part of cubic_term alone (cheap inside Newton loops)."""
    tab = scalar_space.tabulation(RULE)
    pv = fe_values(scalar_space, phi_iter, tab)
    ppv = fe_values(scalar_space, phi_prev, tab)
    elem_r = c * np.einsum("q,c,cq,qi->ci", tab.weights, tab.det,
                           pv ** 3 - ppv, tab.values)
    residual = np.zeros(scalar_space.n_dofs)
    np.add.at(residual, scalar_space.cell_dofs, elem_r)
    return residual


def assemble_source(space, g, t=0.0):
    """Load vector with entries integral(g . phi_i) at time t.

    g(x, y, t) returns values for scalar spaces and an (fx, fy) pair
    for vector spaces; it must accept numpy arrays.
    """
    tab = space.tabulation(RULE)
    x = tab.points[:, :, 0]
    y = tab.points[:, :, 1]
    load = np.zeros(space.n_dofs)
    if space.components == 1:
        gv = np.broadcast_to(np.asarray(g(x, y, t), dtype=float), x.shape)
        elem = np.einsum("q,c,cq,qi->ci", tab.weights, tab.det, gv,
                         tab.values)
        np.add.at(load, space.cell_dofs, elem)
    else:
        gx, gy = g(x, y, t)
        for d, comp in enumerate((gx, gy)):
            gv = np.broadcast_to(np.asarray(comp, dtype=float), x.shape)
            elem = np.einsum("q,c,cq,qi->ci", tab.weights, tab.det, gv,
                             tab.values)
            np.add.at(load, d * space.n_scalar + space.cell_dofs, elem)
    return load


def assemble_gradient_load(space, grad_g, t=0.0):
    """Entries integral(grad_g . grad psi_i) for a scalar space.

    grad_g(x, y, t) returns the pair (d1 g, d2 g).  Right side of the
    energy-orthogonality condition defining the Ritz projection.
    """
    tab = space.tabulation(RULE)
    x = tab.points[:, :, 0]
    y = tab.points[:, :, 1]
    gx, gy = grad_g(x, y, t)
    gx = np.broadcast_to(np.asarray(gx, dtype=float), x.shape)
    gy = np.broadcast_to(np.asarray(gy, dtype=float), x.shape)
    elem = (np.einsum("q,c,cq,cqi->ci", tab.weights, tab.det, gx,
                      tab.grads[:, :, :, 0])
            + np.einsum("q,c,cq,cqi->ci", tab.weights, tab.det, gy,
                        tab.grads[:, :, :, 1]))
    load = np.zeros(space.n_dofs)
    np.add.at(load, space.cell_dofs, elem)
    return load


def assemble_curldiv_load(space, curl_g, div_g, t=0.0):
    """Entries integral(curl_g curl zeta_i + div_g div zeta_i).

    Right side of the orthogonality condition defining the Maxwell
    projection; curl_g and div_g are scalar-valued callables.
    """
    tab = space.tabulation(RULE)
    x = tab.points[:, :, 0]
    y = tab.points[:, :, 1]
    cg = np.broadcast_to(np.asarray(curl_g(x, y, t), dtype=float), x.shape)
    dg = np.broadcast_to(np.asarray(div_g(x, y, t), dtype=float), x.shape)
    load = np.zeros(space.n_dofs)
    curl = np.empty(tab.grads.shape[:3] + (2,))
    curl[:, :, :, 0] = -tab.grads[:, :, :, 1]
    curl[:, :, :, 1] = tab.grads[:, :, :, 0]
    for d in range(2):
        elem = (np.einsum("q,c,cq,cqi->ci", tab.weights, tab.det, cg,
                          curl[:, :, :, d])
                + np.einsum("q,c,cq,cqi->ci", tab.weights, tab.det, dg,
                            tab.grads[:, :, :, d]))
        np.add.at(load, d * space.n_scalar + space.cell_dofs, elem)
    return load


def integral_vector(space):
    """Vector with entries integral(psi_i) over one scalar component."""
    tab = space.tabulation(RULE)
    elem = np.einsum("q,c,qi->ci", tab.weights, tab.det, tab.values)
    vec = np.zeros(space.n_scalar)
    np.add.at(vec, space.cell_dofs, elem)
    return vec
