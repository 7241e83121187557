"""Fully discrete time stepping for the coupled phase-flow-field model.

One step advances all unknowns at once.  The monolithic vector is laid
out as [phi | omega | u | p | B | ell] where ell is the scalar
multiplier pinning the pressure mean.  Explicit lagging keeps the step
almost linear: convection is carried by the previous velocity, the
phase transport by the previous phase gradient, and the magnetic
couplings by the previous field, so the only nonlinearity left is the
convex-split cubic in the potential equation.  Its Newton correction
touches a single block row, which is why the linear rows of the system
(and with them the discrete mass balance) hold to factorization
accuracy at every accepted iterate.

The coupling blocks are exact transposes by construction.  Testing the
step with its own solution then telescopes the energy: the transport
pair cancels against the capillary force, the Lorentz pair against the
induction transport, and what is left is the energy decay inequality
that the diagnostics track.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fespace import P1, P1_BUBBLE, P2, interpolate, make_space
from .forms import (SchemeParams, assemble_convection,
                    assemble_curlcurl_divdiv, assemble_div_coupling,
                    assemble_lorentz, assemble_mass, assemble_phase_transport,
                    assemble_source, assemble_stiffness,
                    cubic_jacobian_triplets, cubic_residual, integral_vector)
from .projections import (l2_projection, maxwell_projection, replace_rows,
                          ritz_projection)
from .sparse import (BorderedLu, CondensedLu, LinearSolveError,
                     solve_linear)


class SolverError(RuntimeError):
    """Newton or linear-solver breakdown during time stepping."""


@dataclass
class Spaces:
    """Discrete spaces of one run; pressure shares the phase space."""

    phi: object
    u: object
    p: object
    B: object


def build_spaces(mesh, case):
    """Element pairing for the two supported cases.

    Case "I" runs the stabilized lowest-order pairing (bubble-enriched
    linear velocity, linear field); case "II" runs quadratic velocity
    and field.  Phase, potential, and pressure are linear in both.
    """
    phi = make_space(mesh, P1, 1)
    if case == "I":
        u = make_space(mesh, P1_BUBBLE, 2)
        B = make_space(mesh, P1, 2)
    elif case == "II":
        u = make_space(mesh, P2, 2)
        B = make_space(mesh, P2, 2)
    else:
        raise ValueError(f"unknown element case {case!r}")
    return Spaces(phi=phi, u=u, p=phi, B=B)


@dataclass
class Problem:
    """A configured run: mesh, spaces, parameters, data, constraints.

    bc_u and bc_B map a time to (dofs, values) in the global numbering
    of their space; None leaves the field unconstrained.  The sources
    are callables (x, y, t) or None for the homogeneous model.
    """

    mesh: object
    spaces: Spaces
    params: SchemeParams
    source_phi: object = None
    source_u: object = None
    source_B: object = None
    bc_u: object = None
    bc_B: object = None


@dataclass
class State:
    """Discrete solution at one time level."""

    t: float
    phi: np.ndarray
    omega: np.ndarray
    u: np.ndarray
    p: np.ndarray
    B: np.ndarray
    lagrange: float = 0.0


def zero_state(spaces):
    return State(t=0.0,
                 phi=np.zeros(spaces.phi.n_dofs),
                 omega=np.zeros(spaces.phi.n_dofs),
                 u=np.zeros(spaces.u.n_dofs),
                 p=np.zeros(spaces.p.n_dofs),
                 B=np.zeros(spaces.B.n_dofs))


def constitutive_potential(spaces, params, phi, lin_tol=1e-10):
    """Potential matching a given phase field through the model's own
    relation, used to seed the diagnostics at step zero."""
    mass = assemble_mass(spaces.phi)
    stiff = assemble_stiffness(spaces.phi, params.gamma)
    rhs = stiff.scipy @ phi + cubic_residual(spaces.phi, phi, phi,
                                             1.0 / params.gamma)
    return solve_linear(mass.matrix, rhs, tol=lin_tol)


def initialize(problem, phi=None, grad_phi=None, u=None, B=None,
               curl_B=None, div_B=None, omega=None, p=None,
               u_fixed=None, B_fixed=None):
    """Project initial data into the discrete spaces.

    Each field accepts a coefficient array (used as is), a callable
    (projected: energy projection for phi, plain least squares for u,
    curl-div projection for B, nodal interpolation for omega and p), or
    None for zero.  Boundary constraints for the u and B projections
    default to the problem's own conditions at t=0; pass u_fixed or
    B_fixed as (dofs, values) to override.
    """
    spc = problem.spaces
    prm = problem.params
    state = zero_state(spc)

    if isinstance(phi, np.ndarray):
        state.phi = phi.astype(float).copy()
    elif phi is not None:
        state.phi = ritz_projection(spc.phi, phi, grad_phi, 0.0,
                                    lin_tol=prm.lin_tol)

    if isinstance(u, np.ndarray):
        state.u = u.astype(float).copy()
    elif u is not None:
        fixed = u_fixed
        if fixed is None and problem.bc_u is not None:
            fixed = problem.bc_u(0.0)
        dofs, vals = fixed if fixed is not None else (None, None)
        state.u = l2_projection(spc.u, u, 0.0, fixed_dofs=dofs,
                                fixed_values=vals, lin_tol=prm.lin_tol)

    if isinstance(B, np.ndarray):
        state.B = B.astype(float).copy()
    elif B is not None:
        fixed = B_fixed
        if fixed is None and problem.bc_B is not None:
            fixed = problem.bc_B(0.0)
        dofs, vals = fixed if fixed is not None else (None, None)
        state.B = maxwell_projection(spc.B, curl_B, div_B, fixed_dofs=dofs,
                                     fixed_values=vals, t=0.0,
                                     lin_tol=prm.lin_tol)

    if isinstance(omega, np.ndarray):
        state.omega = omega.astype(float).copy()
    elif omega == "constitutive":
        state.omega = constitutive_potential(spc, prm, state.phi,
                                             lin_tol=prm.lin_tol)
    elif omega is not None:
        state.omega = interpolate(spc.phi, omega, 0.0)

    if isinstance(p, np.ndarray):
        state.p = p.astype(float).copy()
    elif p is not None:
        state.p = interpolate(spc.p, p, 0.0)

    return state


class Stepper:
    """Per-run assembly caches and the Newton update for one step."""

    def __init__(self, problem):
        self.problem = problem
        spc = problem.spaces
        prm = problem.params
        n_s = spc.phi.n_dofs
        n_u = spc.u.n_dofs
        n_p = spc.p.n_dofs
        n_B = spc.B.n_dofs
        self.s_phi = slice(0, n_s)
        self.s_omega = slice(n_s, 2 * n_s)
        self.s_u = slice(2 * n_s, 2 * n_s + n_u)
        self.s_p = slice(2 * n_s + n_u, 2 * n_s + n_u + n_p)
        self.s_B = slice(2 * n_s + n_u + n_p, 2 * n_s + n_u + n_p + n_B)
        self.i_ell = 2 * n_s + n_u + n_p + n_B
        self.n_total = self.i_ell + 1

        dt = prm.dt
        self.mass_s = assemble_mass(spc.phi).scipy
        stiff_s = assemble_stiffness(spc.phi).scipy
        self.mass_u = assemble_mass(spc.u).scipy
        stiff_u = assemble_stiffness(spc.u).scipy
        self.div = assemble_div_coupling(spc.u, spc.p).scipy
        self.mass_B = assemble_mass(spc.B).scipy
        inv_musig = 1.0 / (prm.mu * prm.sigma)
        curlcc = assemble_curlcurl_divdiv(spc.B, inv_musig, inv_musig).scipy
        self.mean_p = integral_vector(spc.p)

        self.block_phi_phi = self.mass_s / dt
        self.block_phi_omega = prm.mobility * prm.gamma * stiff_s
        self.block_omega_phi = -prm.gamma * stiff_s
        self.block_u_u = self.mass_u / dt + prm.nu * stiff_u
        self.block_B_B = self.mass_B / (prm.mu * dt) + curlcc

        # factorize with one interior pressure row pinned; the dense
        # mean border is folded back in by the bordering algorithm
        center = spc.p.dof_coords - 0.5
        self.pin_row = self.s_p.start + int(
            np.argmin(np.einsum("ij,ij->i", center, center)))

        # cell-interior velocity enrichment couples to itself only
        # through its positive mass-stiffness diagonal (the skew
        # transport has zero diagonal), so those dofs are condensed
        # out of the factorization exactly
        self.elim = None
        if spc.u.family == P1_BUBBLE:
            extra = np.setdiff1d(np.arange(spc.u.n_scalar),
                                 np.unique(spc.u.cell_dofs[:, :3]))
            off = self.s_u.start
            self.elim = np.concatenate(
                [off + extra, off + spc.u.n_scalar + extra])
        self._solver = None
        self._solver_bc = None
        self._prev_full = None

    def assemble_step_system(self, state):
        """Linear matrix and right side for the solve ending one step
        after state.t; the cubic term is added during Newton."""
        prm = self.problem.params
        spc = self.problem.spaces
        t_new = state.t + prm.dt

        transport, transport_t = assemble_phase_transport(
            spc.phi, spc.u, state.phi)
        lorentz_ub, lorentz_bu = assemble_lorentz(
            spc.B, spc.u, state.B, 1.0 / prm.mu)
        convect = assemble_convection(spc.u, state.u).scipy

        col = sp.csr_matrix(self.mean_p.reshape(-1, 1))
        row = sp.csr_matrix(self.mean_p.reshape(1, -1))
        matrix = sp.bmat([
            [self.block_phi_phi, self.block_phi_omega, transport.scipy,
             None, None, None],
            [self.block_omega_phi, self.mass_s, None, None, None, None],
            [None, -prm.lam * transport_t.scipy, self.block_u_u + convect,
             -self.div.T, lorentz_ub.scipy, None],
            [None, None, self.div, None, None, col],
            [None, None, -lorentz_bu.scipy, None, self.block_B_B, None],
            [None, None, None, row, None, None],
        ], format="csr")

        rhs = np.zeros(self.n_total)
        rhs[self.s_phi] = self.mass_s @ state.phi / prm.dt
        rhs[self.s_u] = self.mass_u @ state.u / prm.dt
        rhs[self.s_B] = self.mass_B @ state.B / (prm.mu * prm.dt)
        if self.problem.source_phi is not None:
            rhs[self.s_phi] += assemble_source(spc.phi,
                                               self.problem.source_phi, t_new)
        if self.problem.source_u is not None:
            rhs[self.s_u] += assemble_source(spc.u,
                                             self.problem.source_u, t_new)
        if self.problem.source_B is not None:
            rhs[self.s_B] += assemble_source(spc.B,
                                             self.problem.source_B, t_new)
        return matrix, rhs, t_new

    def _constraints(self, t):
        dofs = []
        vals = []
        if self.problem.bc_u is not None:
            d, v = self.problem.bc_u(t)
            dofs.append(np.asarray(d) + self.s_u.start)
            vals.append(np.asarray(v, dtype=float))
        if self.problem.bc_B is not None:
            d, v = self.problem.bc_B(t)
            dofs.append(np.asarray(d) + self.s_B.start)
            vals.append(np.asarray(v, dtype=float))
        if not dofs:
            return np.empty(0, dtype=int), np.empty(0)
        return np.concatenate(dofs), np.concatenate(vals)

    def _cubic_residual(self, full, phi_prev):
        spc = self.problem.spaces
        prm = self.problem.params
        out = np.zeros(self.n_total)
        out[self.s_omega] = cubic_residual(spc.phi, full[self.s_phi],
                                           phi_prev, -1.0 / prm.gamma)
        return out

    def _build_solver(self, matrix, phi_iter, t_new):
        spc = self.problem.spaces
        prm = self.problem.params
        rr, cc, vv = cubic_jacobian_triplets(spc.phi, phi_iter,
                                             -1.0 / prm.gamma)
        jac_cubic = sp.coo_matrix(
            (vv, (rr + self.s_omega.start, cc + self.s_phi.start)),
            shape=(self.n_total, self.n_total)).tocsr()
        try:
            if self.elim is not None:
                return CondensedLu(matrix + jac_cubic, self.pin_row,
                                   self.elim)
            return BorderedLu(matrix + jac_cubic, self.pin_row)
        except LinearSolveError as exc:
            raise SolverError(
                f"factorization failed at t={t_new:.6g}: {exc}") from exc

    def newton_solve_step(self, state):
        """One accepted time step; returns (new_state, newton_iters).

        The Jacobian factorization is reused across iterations and
        steps while it keeps contracting the residual, and is rebuilt
        at the current iterate when progress degrades.  Reuse is safe:
        convergence is always measured on the true residual, and the
        rows that carry the conservation structure (mass, continuity,
        mean, boundary) are identical in every step matrix, so a frozen
        operator changes only the iteration count.
        """
        prm = self.problem.params
        matrix, rhs, t_new = self.assemble_step_system(state)
        fixed_dofs, fixed_vals = self._constraints(t_new)
        if len(fixed_dofs):
            matrix, rhs = replace_rows(matrix, rhs, fixed_dofs, fixed_vals)
        if self._solver_bc is None or not np.array_equal(self._solver_bc,
                                                         fixed_dofs):
            self._solver = None
            self._solver_bc = fixed_dofs

        full = np.concatenate([state.phi, state.omega, state.u, state.p,
                               state.B, [state.lagrange]])
        # extrapolating the previous step gives the iteration a head
        # start; the guess never changes what converged means
        if self._prev_full is not None:
            full = 2.0 * full - self._prev_full
        self._prev_full = np.concatenate(
            [state.phi, state.omega, state.u, state.p, state.B,
             [state.lagrange]])
        full[fixed_dofs] = fixed_vals
        scale = 1.0 + np.linalg.norm(rhs)

        def nonlinear_residual(vec):
            return matrix @ vec + self._cubic_residual(vec, state.phi) - rhs

        residual = nonlinear_residual(full)
        res_norm = np.linalg.norm(residual)
        iters = 0
        rebuilds = 0
        stale_iters = 0
        # always take at least one update so every linear row, mass
        # balance included, ends the step at factorization accuracy
        while res_norm > prm.newton_tol * scale or iters == 0:
            if iters >= prm.newton_max:
                raise SolverError(
                    f"no Newton convergence at t={t_new:.6g}: "
                    f"residual {res_norm:.3e} after {iters} iterations")
            fresh = self._solver is None
            if not fresh and stale_iters >= 5 and rebuilds < 3:
                fresh = True
            if fresh:
                self._solver = self._build_solver(matrix, full[self.s_phi],
                                                  t_new)
                rebuilds += 1
                stale_iters = 0
            try:
                delta = self._solver.solve(-residual)
            except LinearSolveError as exc:
                raise SolverError(
                    f"linear solve failed at t={t_new:.6g}: {exc}") from exc
            trial = full + delta
            trial_res = nonlinear_residual(trial)
            trial_norm = np.linalg.norm(trial_res)
            if (not fresh and rebuilds < 3
                    and trial_norm > 0.5 * res_norm
                    and trial_norm > prm.newton_tol * scale):
                self._solver = self._build_solver(matrix, full[self.s_phi],
                                                  t_new)
                rebuilds += 1
                stale_iters = 0
                fresh = True
                delta = self._solver.solve(-residual)
                trial = full + delta
                trial_res = nonlinear_residual(trial)
                trial_norm = np.linalg.norm(trial_res)
            alpha = 1.0
            for _ in range(5):
                if trial_norm < res_norm:
                    break
                alpha *= 0.5
                trial = full + alpha * delta
                trial_res = nonlinear_residual(trial)
                trial_norm = np.linalg.norm(trial_res)
            full = trial
            residual = trial_res
            res_norm = trial_norm
            iters += 1
            if not fresh:
                stale_iters += 1

        return State(t=t_new,
                     phi=full[self.s_phi].copy(),
                     omega=full[self.s_omega].copy(),
                     u=full[self.s_u].copy(),
                     p=full[self.s_p].copy(),
                     B=full[self.s_B].copy(),
                     lagrange=float(full[self.i_ell])), iters


def run(problem, state, n_steps, observer=None):
    """March n_steps from the given state; observer(step, state, iters)
    is called once for the start state and after every step."""
    stepper = Stepper(problem)
    if observer is not None:
        observer(0, state, 0)
    for step in range(1, n_steps + 1):
        state, iters = stepper.newton_solve_step(state)
        if observer is not None:
            observer(step, state, iters)
    return state
