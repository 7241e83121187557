import numpy as np
import pytest

from tpmhd.mesh import build_structured_mesh
from tpmhd.fespace import P1, P2, P1_BUBBLE, make_space, interpolate
from tpmhd import forms
from tpmhd.projections import (ritz_projection, l2_projection,
                               maxwell_projection, integrate_function,
                               tangential_boundary_dofs, full_boundary_dofs)


def l2_norm(space, coeffs):
    M = forms.assemble_mass(space).matrix
    return float(np.sqrt(coeffs @ M.matvec(coeffs)))


def l2_error(space, coeffs, fn):
    tab = space.tabulation(forms.RULE)
    x, y = tab.points[:, :, 0], tab.points[:, :, 1]
    fe = forms.fe_values(space, coeffs, tab)
    if space.components == 1:
        diff2 = (fe - fn(x, y)) ** 2
    else:
        fx, fy = fn(x, y)
        diff2 = (fe[:, :, 0] - fx) ** 2 + (fe[:, :, 1] - fy) ** 2
    return float(np.sqrt(np.einsum("q,c,cq->", tab.weights, tab.det, diff2)))


def h1_error(space, coeffs, grad_fn):
    tab = space.tabulation(forms.RULE)
    x, y = tab.points[:, :, 0], tab.points[:, :, 1]
    ge = forms.fe_gradients(space, coeffs, tab)
    gx, gy = grad_fn(x, y)
    diff2 = (ge[:, :, 0] - gx) ** 2 + (ge[:, :, 1] - gy) ** 2
    return float(np.sqrt(np.einsum("q,c,cq->", tab.weights, tab.det, diff2)))


def rate(errs, hs):
    return np.log(errs[-2] / errs[-1]) / np.log(hs[-2] / hs[-1])


class TestRitz:
    def test_reproduces_linear(self):
        space = make_space(build_structured_mesh(4), P1)
        got = ritz_projection(
            space, lambda x, y, t: x + 2.0 * y,
            lambda x, y, t: (np.ones_like(x), 2.0 * np.ones_like(x)))
        want = space.dof_coords[:, 0] + 2.0 * space.dof_coords[:, 1]
        assert np.allclose(got, want, atol=1e-10)

    def test_reproduces_constant(self):
        space = make_space(build_structured_mesh(3), P1)
        got = ritz_projection(
            space, lambda x, y, t: 4.0 + 0.0 * x,
            lambda x, y, t: (np.zeros_like(x), np.zeros_like(x)))
        assert np.allclose(got, 4.0, atol=1e-10)

    def test_preserves_mean(self):
        space = make_space(build_structured_mesh(8), P1)
        f = lambda x, y, t: np.cos(np.pi * x) ** 2 * np.cos(np.pi * y) ** 2
        got = ritz_projection(
            space, f,
            lambda x, y, t: (
                -np.pi * np.sin(2 * np.pi * x) * np.cos(np.pi * y) ** 2,
                -np.pi * np.cos(np.pi * x) ** 2 * np.sin(2 * np.pi * y)))
        mean_fe = forms.integral_vector(space) @ got
        mean_exact = integrate_function(space, f)
        assert abs(mean_fe - mean_exact) <= 1e-10

    def test_convergence_orders(self):
        f = lambda x, y: np.cos(np.pi * x) ** 2 * np.cos(np.pi * y) ** 2
        gf = lambda x, y: (
            -np.pi * np.sin(2 * np.pi * x) * np.cos(np.pi * y) ** 2,
            -np.pi * np.cos(np.pi * x) ** 2 * np.sin(2 * np.pi * y))
        errs_l2, errs_h1, hs = [], [], []
        for n in (8, 16, 32):
            space = make_space(build_structured_mesh(n), P1)
            got = ritz_projection(space, lambda x, y, t: f(x, y),
                                  lambda x, y, t: gf(x, y))
            errs_l2.append(l2_error(space, got, f))
            errs_h1.append(h1_error(space, got, gf))
            hs.append(np.sqrt(2.0) / n)
        assert abs(rate(errs_l2, hs) - 2.0) <= 0.3
        assert abs(rate(errs_h1, hs) - 1.0) <= 0.3


class TestL2:
    def test_zero(self):
        space = make_space(build_structured_mesh(3), P1_BUBBLE, 2)
        got = l2_projection(space, lambda x, y, t: (0.0 * x, 0.0 * x))
        assert np.max(np.abs(got)) <= 1e-12

    @pytest.mark.parametrize("family", [P1, P2, P1_BUBBLE])
    def test_idempotent_on_space_member(self, family):
        space = make_space(build_structured_mesh(4), family)
        f = lambda x, y, t: 1.0 - 2.0 * x + 3.0 * y
        got = l2_projection(space, f)
        diff = got - interpolate(space, f)
        assert l2_norm(space, diff) <= 1e-11

    def test_convergence_order(self):
        def f(x, y, t):
            return (np.pi * np.sin(2 * np.pi * y) * np.sin(np.pi * x) ** 2,
                    -np.pi * np.sin(2 * np.pi * x) * np.sin(np.pi * y) ** 2)
        errs, hs = [], []
        for n in (8, 16, 32):
            space = make_space(build_structured_mesh(n), P1_BUBBLE, 2)
            dofs, vals = full_boundary_dofs(space)
            got = l2_projection(space, f, fixed_dofs=dofs, fixed_values=vals)
            errs.append(l2_error(space, got, lambda x, y: f(x, y, 0.0)))
            hs.append(np.sqrt(2.0) / n)
        assert abs(rate(errs, hs) - 2.0) <= 0.3


class TestMaxwell:
    def test_reproduces_constant(self):
        space = make_space(build_structured_mesh(3), P1, 2)
        f = lambda x, y, t: (np.ones_like(x), np.zeros_like(x))
        dofs, vals = tangential_boundary_dofs(space, f)
        got = maxwell_projection(space, lambda x, y, t: 0.0 * x,
                                 lambda x, y, t: 0.0 * x, dofs, vals)
        want = interpolate(space, f)
        assert np.allclose(got, want, atol=1e-11)

    @pytest.mark.parametrize("family", [P1, P2])
    def test_idempotent_on_space_member(self, family):
        space = make_space(build_structured_mesh(3), family, 2)
        f = lambda x, y, t: (-y + 0.5 * x, x + 1.0)
        dofs, vals = tangential_boundary_dofs(space, f)
        got = maxwell_projection(space,
                                 lambda x, y, t: 2.0 * np.ones_like(x),
                                 lambda x, y, t: 0.5 * np.ones_like(x),
                                 dofs, vals)
        diff = got - interpolate(space, f)
        assert l2_norm(space, diff) <= 1e-11

    def test_convergence_order_p2(self):
        def f(x, y):
            return (np.sin(np.pi * x) * np.cos(np.pi * y),
                    -np.sin(np.pi * y) * np.cos(np.pi * x))

        def curl_f(x, y, t):
            return 2 * np.pi * np.sin(np.pi * x) * np.sin(np.pi * y)

        errs, hs = [], []
        for n in (8, 16, 32):
            space = make_space(build_structured_mesh(n), P2, 2)
            dofs, vals = tangential_boundary_dofs(
                space, lambda x, y, t: f(x, y))
            got = maxwell_projection(space, curl_f,
                                     lambda x, y, t: 0.0 * x, dofs, vals)
            errs.append(l2_error(space, got, f))
            hs.append(np.sqrt(2.0) / n)
        assert abs(rate(errs, hs) - 3.0) <= 0.4


class TestBoundaryHelpers:
    def test_tangential_components_by_side(self):
        space = make_space(build_structured_mesh(2), P1, 2)
        f = lambda x, y, t: (x + 10.0, y - 10.0)
        dofs, vals = tangential_boundary_dofs(space, f)
        coords = space.dof_coords
        ns = space.n_scalar
        for dof, val in zip(dofs, vals):
            comp, sdof = divmod(dof, ns)
            x, y = coords[sdof]
            if comp == 0:
                assert y in (0.0, 1.0)
                assert val == pytest.approx(x + 10.0)
            else:
                assert x in (0.0, 1.0)
                assert val == pytest.approx(y - 10.0)

    def test_periodic_mesh_keeps_horizontal_sides_only(self):
        space = make_space(build_structured_mesh(4, periodic_x=True), P1, 2)
        dofs, _ = tangential_boundary_dofs(space)
        coords = space.dof_coords
        for dof in dofs:
            comp, sdof = divmod(dof, space.n_scalar)
            assert comp == 0
            assert coords[sdof, 1] in (0.0, 1.0)

    def test_full_boundary_scalar_and_vector(self):
        mesh = build_structured_mesh(2)
        sdofs, svals = full_boundary_dofs(make_space(mesh, P1),
                                          lambda x, y, t: x)
        assert len(sdofs) == 8
        vspace = make_space(mesh, P1, 2)
        vdofs, vvals = full_boundary_dofs(vspace, lambda x, y, t: (x, -y))
        assert len(vdofs) == 16
