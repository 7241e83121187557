"""Initial-data projections: Ritz, L2, and Maxwell.

Each projection is the solve of one assembled system.  The Ritz
projection matches means through a bordered Lagrange multiplier rather
than by pinning a degree of freedom, which keeps the stiffness block
symmetric and well conditioned.  The Maxwell projection fixes the
tangential boundary degrees of freedom from interpolated data before
solving; on the simply connected square that leaves the curl-curl plus
div-div operator with a trivial kernel, so the solve is well posed even
for data with nonzero tangential trace.
"""

import numpy as np
import scipy.sparse as sp

from . import forms
from .mesh import TAGS
from .sparse import BorderedLu, CsrMatrix, LinearSolveError, solve_linear


def replace_rows(matrix, rhs, fixed_dofs, fixed_values):
    """Overwrite rows with identity and pinned right-side values.

    Parameters
    ----------
    matrix : scipy sparse matrix (square)
    rhs : ndarray
    fixed_dofs : ndarray of int
    fixed_values : ndarray

    Returns
    -------
    (scipy csr matrix, ndarray)
    """
    n = matrix.shape[0]
    free = np.ones(n)
    free[fixed_dofs] = 0.0
    fix = 1.0 - free
    out = sp.diags(free) @ matrix + sp.diags(fix)
    new_rhs = rhs * free
    new_rhs[fixed_dofs] = fixed_values
    return out.tocsr(), new_rhs


def bordered(matrix, border):
    """Append one symmetric Lagrange row/column to a square matrix."""
    col = sp.csr_matrix(border.reshape(-1, 1))
    row = sp.csr_matrix(border.reshape(1, -1))
    corner = sp.csr_matrix((1, 1))
    return sp.bmat([[matrix, col], [row, corner]], format="csr")


def integrate_function(space, fn, t=0.0):
    """Quadrature of an analytic scalar function over the domain."""
    tab = space.tabulation(forms.RULE)
    x = tab.points[:, :, 0]
    y = tab.points[:, :, 1]
    vals = np.broadcast_to(np.asarray(fn(x, y, t), dtype=float), x.shape)
    return float(np.einsum("q,c,cq->", tab.weights, tab.det, vals))


def tangential_boundary_dofs(space, fn=None, t=0.0):
    """Tangential-trace dofs of a vector space with interpolated data.

    The tangential direction is the x-component on the horizontal sides
    and the y-component on the vertical sides; corners collect both.
    On x-periodic meshes only the horizontal sides constrain.

    Returns
    -------
    (dofs, values) : global dof indices and data values; fn defaults to
        zero data.
    """
    dofs = []
    values = []
    sides = [("bottom", 0), ("top", 0)]
    if not space.mesh.periodic_x:
        sides += [("left", 1), ("right", 1)]
    for tag, comp in sides:
        sdofs = space.boundary_scalar_dofs(tag)
        dofs.append(comp * space.n_scalar + sdofs)
        if fn is None:
            values.append(np.zeros(len(sdofs)))
        else:
            x = space.dof_coords[sdofs, 0]
            y = space.dof_coords[sdofs, 1]
            data = fn(x, y, t)[comp]
            values.append(np.broadcast_to(np.asarray(data, float), x.shape))
    dofs = np.concatenate(dofs)
    values = np.concatenate(values)
    dofs, keep = np.unique(dofs, return_index=True)
    return dofs, values[keep]


def full_boundary_dofs(space, fn=None, t=0.0):
    """All boundary dofs of a space with interpolated Dirichlet data.

    Works for scalar and vector spaces; on x-periodic meshes the left
    and right sides are skipped (they are interior there).
    """
    tags = [t_ for t_ in TAGS
            if not (space.mesh.periodic_x and t_ in ("left", "right"))]
    sdofs = np.unique(np.concatenate(
        [space.boundary_scalar_dofs(t_) for t_ in tags]))
    x = space.dof_coords[sdofs, 0]
    y = space.dof_coords[sdofs, 1]
    if space.components == 1:
        if fn is None:
            vals = np.zeros(len(sdofs))
        else:
            vals = np.broadcast_to(np.asarray(fn(x, y, t), float), x.shape)
        return sdofs, vals
    dofs = np.concatenate([comp * space.n_scalar + sdofs
                           for comp in range(2)])
    if fn is None:
        return dofs, np.zeros(len(dofs))
    fx, fy = fn(x, y, t)
    vals = np.concatenate([
        np.broadcast_to(np.asarray(fx, float), x.shape),
        np.broadcast_to(np.asarray(fy, float), x.shape)])
    return dofs, vals


def ritz_projection(space, f, grad_f, t=0.0, lin_tol=1e-10):
    """Energy projection with mean matching onto a scalar space.

    Solves (grad(Pf), grad psi) = (grad f, grad psi) for all psi,
    subject to integral(Pf) = integral(f), the latter enforced by a
    bordered multiplier.
    """
    K = forms.assemble_stiffness(space).scipy
    c = forms.integral_vector(space)
    rhs = np.concatenate([forms.assemble_gradient_load(space, grad_f, t),
                          [integrate_function(space, f, t)]])
    system = bordered(K, c)
    sol = BorderedLu(system, pin_row=0).solve(rhs)
    res = np.linalg.norm(system @ sol - rhs)
    bound = lin_tol * max(np.linalg.norm(rhs), np.finfo(float).tiny)
    if res > bound:
        raise LinearSolveError(
            f"projection residual {res:.3e} exceeds {bound:.3e}",
            residual=res)
    return sol[:-1]


def l2_projection(space, f, t=0.0, fixed_dofs=None, fixed_values=None,
                  lin_tol=1e-10):
    """Mass-matrix projection, optionally with pinned boundary dofs.

    Pinning realizes projection onto the affine subspace satisfying the
    essential boundary conditions of the target field.
    """
    M = forms.assemble_mass(space).scipy
    rhs = forms.assemble_source(space, f, t)
    if fixed_dofs is not None and len(fixed_dofs):
        M, rhs = replace_rows(M, rhs, fixed_dofs, fixed_values)
    return solve_linear(CsrMatrix(M), rhs, tol=lin_tol)


def maxwell_projection(space, curl_f, div_f, fixed_dofs, fixed_values,
                       t=0.0, lin_tol=1e-10):
    """Curl-curl plus div-div projection with fixed tangential trace.

    Solves (curl(Pf), curl zeta) + (div(Pf), div zeta) =
    (curl f, curl zeta) + (div f, div zeta) for all zeta vanishing on
    the constrained dofs, which themselves carry interpolated data.
    """
    A = forms.assemble_curlcurl_divdiv(space).scipy
    rhs = forms.assemble_curldiv_load(space, curl_f, div_f, t)
    A, rhs = replace_rows(A, rhs, fixed_dofs, fixed_values)
    return solve_linear(CsrMatrix(A), rhs, tol=lin_tol)
