"""Experiment drivers: convergence study, phase separation, shear layer.

Each driver builds its problem from a RunConfig, marches the scheme,
and emits the delimited outputs (plus figures and optional field
dumps) into the requested directory.  Solver failures abort the run
but everything computed up to the failing step is already on disk.
"""

import numpy as np

from . import forms
from .diagnostics import RateTable, energy, error_norms, total_mass
from .manufactured import ExactSolution
from .mesh import build_structured_mesh, mesh_size
from .projections import full_boundary_dofs, tangential_boundary_dofs
from .report import (CsvWriter, DIAG_COLUMNS, plot_convergence,
                     plot_diagnostics, write_convergence_csv)
from .scheme import Problem, SolverError, Stepper, build_spaces, initialize
from .sparse import solve_linear
from .vtk import write_vtk


def spinodal_phase(space, seed):
    """Near-uniform mixture with seeded noise of exactly zero mean.

    The perturbation is uniform in [-1, 1] per degree of freedom; its
    discrete mean is removed against the quadrature weights so the
    initial total mass is exactly -0.05 times the domain area.
    """
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-1.0, 1.0, space.n_dofs)
    weights = forms.integral_vector(space)
    noise -= (weights @ noise) / weights.sum()
    return -0.05 + 0.001 * noise


def vorticity_projection(u_space, u, scalar_space, lin_tol=1e-10):
    """L2 projection of the discrete rotation onto a linear space."""
    tab_u = u_space.tabulation(forms.RULE)
    tab_s = scalar_space.tabulation(forms.RULE)
    g = forms.fe_gradients(u_space, u, tab_u)
    rot = g[:, :, 1, 0] - g[:, :, 0, 1]
    wdet = tab_s.weights[None, :] * tab_s.det[:, None]
    cellvals = np.einsum("cq,qi->ci", wdet * rot, tab_s.values)
    rhs = np.zeros(scalar_space.n_dofs)
    np.add.at(rhs, scalar_space.cell_dofs, cellvals)
    mass = forms.assemble_mass(scalar_space)
    return solve_linear(mass.matrix, rhs, tol=lin_tol)


def _manufactured_problem(cfg, n, dt):
    mesh = build_structured_mesh(n)
    spaces = build_spaces(mesh, cfg.case)
    params = cfg.scheme_params(dt)
    exact = ExactSolution(params)
    problem = Problem(
        mesh=mesh, spaces=spaces, params=params,
        source_phi=exact.source_phi, source_u=exact.source_u,
        source_B=exact.source_B,
        bc_u=lambda t: full_boundary_dofs(spaces.u, exact.u, t),
        bc_B=lambda t: tangential_boundary_dofs(spaces.B, exact.B, t))
    state = initialize(problem, phi=exact.phi, grad_phi=exact.grad_phi,
                       u=exact.u, B=exact.B, curl_B=exact.curl_B,
                       div_B=exact.div_B, omega=exact.omega, p=exact.p)
    return problem, state, exact


def run_converge(cfg, out_dir):
    """Manufactured-solution refinement sweep; returns the rate table.

    The table CSV is rewritten after every completed mesh so an
    aborted sweep leaves the finished rows behind.
    """
    csv_path = out_dir / f"converge_case{cfg.case}.csv"
    png_path = out_dir / f"converge_case{cfg.case}.png"
    hs, dts, reports = [], [], []
    for n in cfg.n_list:
        dt, n_steps = cfg.resolve_dt(n)
        problem, state, exact = _manufactured_problem(cfg, n, dt)
        stepper = Stepper(problem)
        try:
            for _ in range(n_steps):
                state, _ = stepper.newton_solve_step(state)
        except SolverError:
            if reports:
                write_convergence_csv(
                    csv_path, RateTable.from_reports(hs, dts, reports))
            raise
        spc = problem.spaces
        reports.append(error_norms(exact, state.t, spc.phi, state.phi,
                                   state.omega, spc.u, state.u, spc.p,
                                   state.p, spc.B, state.B))
        hs.append(mesh_size(problem.mesh))
        dts.append(dt)
        table = RateTable.from_reports(hs, dts, reports)
        write_convergence_csv(csv_path, table)
    plot_convergence(png_path, table,
                     f"manufactured solution, case {cfg.case}")
    return table


def _march(problem, state, n_steps, writer, dump_every=0, dump=None):
    """Step the scheme emitting one diagnostics row per time level."""
    spc = problem.spaces
    prm = problem.params
    stepper = Stepper(problem)
    rows = []

    def emit(step, st, iters):
        rep = energy(prm, spc.phi, st.phi, st.omega, spc.u, st.u,
                     spc.B, st.B)
        mass = total_mass(spc.phi, st.phi)
        row = (step, st.t, rep.total, rep.total, mass, rep.diss_omega,
               rep.diss_u, rep.diss_curl, rep.diss_div, iters)
        writer.row(row)
        rows.append(row)
        if dump is not None and dump_every and step % dump_every == 0:
            dump(step, st)

    emit(0, state, 0)
    for step in range(1, n_steps + 1):
        state, iters = stepper.newton_solve_step(state)
        emit(step, state, iters)
    return state, rows


def run_spinodal(cfg, out_dir):
    """Phase separation from seeded noise in a closed box."""
    mesh = build_structured_mesh(cfg.n)
    spaces = build_spaces(mesh, cfg.case)
    dt, n_steps = cfg.resolve_dt(cfg.n)
    prm = cfg.scheme_params(dt)
    problem = Problem(
        mesh=mesh, spaces=spaces, params=prm,
        bc_u=lambda t: full_boundary_dofs(spaces.u),
        bc_B=lambda t: full_boundary_dofs(spaces.B))
    state = initialize(problem, phi=spinodal_phase(spaces.phi, cfg.seed),
                       omega="constitutive")

    def dump(step, st):
        write_vtk(mesh, {"phi": (spaces.phi, st.phi),
                         "u": (spaces.u, st.u),
                         "p": (spaces.p, st.p),
                         "B": (spaces.B, st.B)},
                  out_dir / f"spinodal_{step:06d}.vtk")

    csv_path = out_dir / "spinodal_diagnostics.csv"
    with CsvWriter(csv_path, DIAG_COLUMNS) as writer:
        state, rows = _march(problem, state, n_steps, writer,
                             cfg.dump_every, dump)
    plot_diagnostics(out_dir / "spinodal_diagnostics.png", rows,
                     "phase separation")
    return state, rows


def run_kh(cfg, out_dir):
    """Shear layer with a sinusoidal interface perturbation.

    Periodic in x; free slip for the velocity and a fixed horizontal
    magnetic field at the walls.  The vorticity dump is the rotation of
    the discrete velocity projected onto the linear phase space.
    """
    mesh = build_structured_mesh(cfg.n, periodic_x=True)
    spaces = build_spaces(mesh, cfg.case)
    dt, n_steps = cfg.resolve_dt(cfg.n)
    prm = cfg.scheme_params(dt)
    wave = 2.0 * np.pi if cfg.kh_mode == "single" else 4.0 * np.pi
    width = np.sqrt(2.0) * prm.gamma

    def profile(x, y, t):
        return np.tanh((y - 0.5 - 0.01 * np.sin(wave * x)) / width)

    def grad_profile(x, y, t):
        th = profile(x, y, t)
        sech2 = 1.0 - th * th
        return (-0.01 * wave * np.cos(wave * x) / width * sech2,
                sech2 / width)

    def _zeros(x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def initial_u(x, y, t):
        return (profile(x, y, t), _zeros(x, y))

    def initial_B(x, y, t):
        return (1.0 + _zeros(x, y), _zeros(x, y))

    def zero_fn(x, y, t):
        return _zeros(x, y)

    u2_dofs = np.unique(np.concatenate(
        [spaces.u.boundary_component_dofs(tag, 1)
         for tag in ("bottom", "top")]))
    wall_scalar = np.unique(np.concatenate(
        [spaces.B.boundary_scalar_dofs(tag) for tag in ("bottom", "top")]))
    b_dofs = np.concatenate([wall_scalar,
                             spaces.B.n_scalar + wall_scalar])
    b_vals = np.concatenate([-np.ones(len(wall_scalar)),
                             np.zeros(len(wall_scalar))])
    problem = Problem(
        mesh=mesh, spaces=spaces, params=prm,
        bc_u=lambda t: (u2_dofs, np.zeros(len(u2_dofs))),
        bc_B=lambda t: (b_dofs, b_vals))
    # the initial field carries its own trace; the wall data above
    # applies from the first step on
    state = initialize(problem, phi=profile, grad_phi=grad_profile,
                       u=initial_u, B=initial_B, curl_B=zero_fn,
                       div_B=zero_fn, omega="constitutive",
                       B_fixed=tangential_boundary_dofs(spaces.B,
                                                        initial_B))

    def dump(step, st):
        vort = vorticity_projection(spaces.u, st.u, spaces.phi,
                                    prm.lin_tol)
        write_vtk(mesh, {"phi": (spaces.phi, st.phi),
                         "u": (spaces.u, st.u),
                         "p": (spaces.p, st.p),
                         "B": (spaces.B, st.B),
                         "vorticity": (spaces.phi, vort)},
                  out_dir / f"kh_{step:06d}.vtk")

    csv_path = out_dir / "kh_diagnostics.csv"
    with CsvWriter(csv_path, DIAG_COLUMNS) as writer:
        state, rows = _march(problem, state, n_steps, writer,
                             cfg.dump_every, dump)
    plot_diagnostics(out_dir / "kh_diagnostics.png", rows,
                     f"shear layer, {cfg.kh_mode} mode")
    return state, rows
