"""Norms, invariants, and convergence-rate reporting.

All integrals here use the same degree-8 quadrature as the assembly
path.  That matters for the energy: the discrete decay argument holds
for the quadrature-evaluated functional, so evaluating it with a
different rule could show spurious growth at the roundoff level.
"""

from dataclasses import dataclass

import numpy as np

from .forms import RULE, fe_gradients, fe_values, integral_vector


def _eval_exact(fn, tab, t):
    x = tab.points[..., 0]
    y = tab.points[..., 1]
    return fn(x, y, t) if t is not None else fn(x, y)


def _integrate(space, cellwise):
    tab = space.tabulation(RULE)
    return float(np.einsum("q,c,cq->", tab.weights, tab.det, cellwise))


def l2_error(space, coeffs, fn=None, t=None):
    """L2 norm of a discrete field, or of its error against fn."""
    tab = space.tabulation(RULE)
    vals = fe_values(space, coeffs, tab)
    if fn is not None:
        ex = _eval_exact(fn, tab, t)
        if space.components == 1:
            vals = vals - ex
        else:
            vals = vals - np.stack(ex, axis=-1)
    sq = vals ** 2 if space.components == 1 else np.sum(vals ** 2, axis=-1)
    return np.sqrt(_integrate(space, sq))


def h1semi_error(space, coeffs, grad_fn=None, t=None):
    """H1 seminorm of a discrete field, or of its error against grad_fn."""
    tab = space.tabulation(RULE)
    grads = fe_gradients(space, coeffs, tab)
    if grad_fn is not None:
        ex = _eval_exact(grad_fn, tab, t)
        if space.components == 1:
            grads = grads - np.stack(ex, axis=-1)
        else:
            rows = [np.stack(row, axis=-1) for row in ex]
            grads = grads - np.stack(rows, axis=-2)
    if space.components == 1:
        sq = np.sum(grads ** 2, axis=-1)
    else:
        sq = np.sum(grads ** 2, axis=(-2, -1))
    return np.sqrt(_integrate(space, sq))


def curl_error(space, coeffs, curl_fn=None, t=None):
    """L2 norm of the scalar curl of a vector field, or of its error."""
    tab = space.tabulation(RULE)
    grads = fe_gradients(space, coeffs, tab)
    curl = grads[..., 1, 0] - grads[..., 0, 1]
    if curl_fn is not None:
        curl = curl - _eval_exact(curl_fn, tab, t)
    return np.sqrt(_integrate(space, curl ** 2))


def div_error(space, coeffs, div_fn=None, t=None):
    """L2 norm of the divergence of a vector field, or of its error."""
    tab = space.tabulation(RULE)
    grads = fe_gradients(space, coeffs, tab)
    div = grads[..., 0, 0] + grads[..., 1, 1]
    if div_fn is not None:
        div = div - _eval_exact(div_fn, tab, t)
    return np.sqrt(_integrate(space, div ** 2))


def total_mass(space, coeffs):
    """Integral of a scalar discrete field, exact for the basis."""
    return float(integral_vector(space) @ coeffs)


@dataclass
class EnergyReport:
    """Energy split and dissipation rates of one discrete state."""

    total: float
    interface: float
    bulk: float
    kinetic: float
    magnetic: float
    diss_omega: float
    diss_u: float
    diss_curl: float
    diss_div: float


def energy(params, phi_space, phi, omega, u_space, u, B_space, B):
    """Generalized energy and dissipation rates of a discrete state.

    The functional is

        lam * (gamma/2 ||grad phi||^2 + 1/gamma int F(phi))
        + 1/2 ||u||^2 + 1/(2 mu) ||B||^2

    with F(phi) = (phi^2 - 1)^2 / 4, and the scheme decreases it from
    step to step.  Dissipation rates use the lagged-coefficient weights
    lam*M*gamma, nu, and 1/(mu*sigma)."""
    tab = phi_space.tabulation(RULE)
    pvals = fe_values(phi_space, phi, tab)
    pgrad = fe_gradients(phi_space, phi, tab)
    interface = 0.5 * params.gamma * _integrate(
        phi_space, np.sum(pgrad ** 2, axis=-1))
    bulk = _integrate(phi_space, 0.25 * (pvals ** 2 - 1.0) ** 2) / params.gamma
    interface *= params.lam
    bulk *= params.lam

    kinetic = 0.5 * l2_error(u_space, u) ** 2
    magnetic = 0.5 * l2_error(B_space, B) ** 2 / params.mu

    diss_omega = (params.lam * params.mobility * params.gamma
                  * h1semi_error(phi_space, omega) ** 2)
    diss_u = params.nu * h1semi_error(u_space, u) ** 2
    inv_musig = 1.0 / (params.mu * params.sigma)
    diss_curl = inv_musig * curl_error(B_space, B) ** 2
    diss_div = inv_musig * div_error(B_space, B) ** 2

    return EnergyReport(total=interface + bulk + kinetic + magnetic,
                        interface=interface, bulk=bulk, kinetic=kinetic,
                        magnetic=magnetic, diss_omega=diss_omega,
                        diss_u=diss_u, diss_curl=diss_curl,
                        diss_div=diss_div)


@dataclass
class ErrorReport:
    """Errors of one run against the exact solution, in output order."""

    l2_phi: float
    h1semi_phi: float
    l2_omega: float
    l2_u: float
    h1semi_u: float
    l2_p: float
    l2_B: float
    h1semi_B: float
    curl_B: float
    div_B: float

    NAMES = ("l2_phi", "h1semi_phi", "l2_omega", "l2_u", "h1semi_u",
             "l2_p", "l2_B", "h1semi_B", "curl_B", "div_B")

    def as_tuple(self):
        return tuple(getattr(self, name) for name in self.NAMES)


def error_norms(exact, t, phi_space, phi, omega, u_space, u,
                p_space, p, B_space, B):
    """All tracked error norms of a state against the exact fields."""
    return ErrorReport(
        l2_phi=l2_error(phi_space, phi, exact.phi, t),
        h1semi_phi=h1semi_error(phi_space, phi, exact.grad_phi, t),
        l2_omega=l2_error(phi_space, omega, exact.omega, t),
        l2_u=l2_error(u_space, u, exact.u, t),
        h1semi_u=h1semi_error(u_space, u, exact.grad_u, t),
        l2_p=l2_error(p_space, p, exact.p, t),
        l2_B=l2_error(B_space, B, exact.B, t),
        h1semi_B=h1semi_error(B_space, B, exact.grad_B, t),
        curl_B=curl_error(B_space, B, exact.curl_B, t),
        div_B=div_error(B_space, B, exact.div_B, t),
    )


@dataclass
class RateTable:
    """Mesh sizes, per-norm errors, and the observed rates between rows."""

    h: list
    dt: list
    errors: dict
    rates: dict

    @classmethod
    def from_reports(cls, hs, dts, reports):
        errors = {name: [getattr(r, name) for r in reports]
                  for name in ErrorReport.NAMES}
        rates = {name: rate_sequence(hs, errs)
                 for name, errs in errors.items()}
        return cls(h=list(hs), dt=list(dts), errors=errors, rates=rates)

    def final_rate(self, name):
        return self.rates[name][-1]


def rate_sequence(hs, errs):
    """Observed orders log(e_prev/e_cur) / log(h_prev/h_cur).

    The first entry is nan; degenerate ratios give nan rather than
    raising so a stalled error column stays visible in the table."""
    out = [float("nan")]
    for i in range(1, len(errs)):
        num, den = errs[i - 1], errs[i]
        hr = hs[i - 1] / hs[i]
        if num <= 0 or den <= 0 or hr <= 0 or hr == 1.0:
            out.append(float("nan"))
        else:
            out.append(float(np.log(num / den) / np.log(hr)))
    return out
