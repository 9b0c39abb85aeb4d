"""Spectral curves, elliptic variables and Dubrovin residuals.

Curve conventions (``var`` is lambda for lpKdV and zeta = lambda^2 otherwise):

========  ===================  ============  =====
model     R(var)               curve         genus
========  ===================  ============  =====
lpKdV     (F alpha) alpha      xi^2 = -R     N
lpmKdV    -4 (F alpha) alpha   xi^2 = R      N - 1
lSKdV     -4 zeta (F alpha)    xi^2 = R      N
          alpha
========  ===================  ============  =====

In every case R is monic. The elliptic variables are the zeros of the
off-diagonal Lax entries with their known prefactors and denominators
cleared; each is lifted to the curve through L11.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import algebra, models
from .errors import DegenerateInputError, FitError, RootTrackingError
from .hamiltonian import integrate
from .models import Model, PhasePoint, Spectrum, inner

DEGENERATE_ROOT_TOL = 1e-6


@dataclass(frozen=True)
class CurveData:
    """Hyperelliptic curve xi^2 = sign * R(var)."""

    model: Model
    R: np.ndarray
    genus: int
    branch_points: np.ndarray
    sign: int
    degenerate: bool
    numerator: np.ndarray = field(repr=False, default=None)

    def xi_squared(self, var):
        return self.sign * algebra.poly_eval(self.R, var)


@dataclass(frozen=True)
class EllipticVars:
    """Zeros of L21 (nu) and, for the zeta models, of L12 (mu), with lifts.

    ``nu`` and ``mu`` hold values of the curve variable, so they are the
    squares nu_j^2, mu_j^2 for lpmKdV and lSKdV.
    """

    nu: np.ndarray
    xi_nu: np.ndarray
    n_poly: np.ndarray
    mu: np.ndarray | None = None
    xi_mu: np.ndarray | None = None
    m_poly: np.ndarray | None = None


def genus(model, N: int) -> int:
    return N - 1 if Model.parse(model) is Model.LPMKDV else N


def _min_gap(r) -> float:
    d = np.abs(r[:, None] - r[None, :])
    np.fill_diagonal(d, np.inf)
    return float(d.min())


def _degenerate(roots) -> bool:
    r = np.asarray(roots)
    if r.size < 2:
        return False
    return bool(_min_gap(r) <= DEGENERATE_ROOT_TOL * (1.0 + np.abs(r).max()))


def _sort_points(z):
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


def spectral_curve(model, spec: Spectrum, x: PhasePoint) -> CurveData:
    """Fit F alpha and assemble R, the branch points and the degeneracy flag."""
    model = Model.parse(model)
    num = models.generating_numerator(model, spec, x)
    al = models.alpha_poly(model, spec)
    if model is Model.LPKDV:
        R, sign = algebra.poly_mul(num, al), -1
    elif model is Model.LPMKDV:
        R, sign = -4.0 * algebra.poly_mul(num, al), 1
    else:
        R, sign = -4.0 * algebra.poly_mul(np.array([0, 1], dtype=complex),
                                          algebra.poly_mul(num, al)), 1
    roots = algebra.poly_roots(R)
    return CurveData(model, R, genus(model, spec.N), _sort_points(roots), sign,
                     _degenerate(roots), num)


# ------------------------------------------------------------- elliptic variables

def _circle(spec, model, K):
    keys = spec.alpha if model is Model.LPKDV else spec.alpha ** 2
    r = 2.0 + 2.0 * float(np.max(np.abs(keys)))
    return r * np.exp(2j * np.pi * (np.arange(K) + 0.5) / K)


def _entry_numerators(model, spec, x):
    """Monic numerators (n, m) of L21 and L12 in the curve variable, and the prefactors."""
    n = spec.N
    var = _circle(spec, model, max(2 * n + 2, 12))
    lam = var if model is Model.LPKDV else algebra.csqrt(var)
    _, L12, L21 = models.lax_entries(model, spec, x, lam)
    al = algebra.poly_eval(models.alpha_poly(model, spec), var)
    a = spec.alpha
    if model is Model.LPKDV:
        pre21, pre12 = np.ones_like(var), None
        deg = n
    elif model is Model.LPMKDV:
        pre21 = lam * inner(a * x.q, x.q)
        pre12 = -lam * inner(a * x.p, x.p)
        deg = n - 1
    else:
        pre21 = np.ones_like(var)
        pre12 = -inner(x.p, x.q) * np.ones_like(var)
        deg = n
    out = []
    for entry, pre in ((L21, pre21), (L12, pre12)):
        if pre is None:
            out.append(None)
            continue
        if np.max(np.abs(pre)) <= 1e-12:
            raise DegenerateInputError("leading coefficient of an off-diagonal entry vanishes")
        poly, resid = algebra.poly_fit(var, entry * al / pre, deg)
        if resid > 1e-8 or abs(poly[-1] - 1) > 1e-8 * (1 + np.abs(poly).max()):
            raise FitError(f"off-diagonal entry does not fit its product form ({resid:.2e})")
        poly[-1] = 1.0
        out.append(poly)
    return out[0], out[1]


def lift(model, spec: Spectrum, x: PhasePoint, var) -> np.ndarray:
    """xi at points where L21 or L12 vanishes, from L11: xi^2 = sign R there."""
    model = Model.parse(model)
    var = np.atleast_1d(np.asarray(var, dtype=complex))
    al = algebra.poly_eval(models.alpha_poly(model, spec), var)
    if model is Model.LPKDV:
        L11 = models.lax_entries(model, spec, x, var)[0]
        return al * L11
    lam = algebra.csqrt(var)
    L11 = models.lax_entries(model, spec, x, lam)[0]
    if model is Model.LPMKDV:
        return 2.0 * al * L11
    # lSKdV: L11 = lambda g(zeta), so lambda L11 = zeta g is even in lambda
    return 2.0 * al * lam * L11


def elliptic_variables(model, spec: Spectrum, x: PhasePoint) -> EllipticVars:
    model = Model.parse(model)
    n_poly, m_poly = _entry_numerators(model, spec, x)
    nu = algebra.poly_roots(n_poly) if n_poly.size > 1 else np.zeros(0, dtype=complex)
    ev = dict(nu=nu, xi_nu=lift(model, spec, x, nu) if nu.size else nu, n_poly=n_poly)
    if m_poly is not None:
        mu = algebra.poly_roots(m_poly) if m_poly.size > 1 else np.zeros(0, dtype=complex)
        ev.update(mu=mu, xi_mu=lift(model, spec, x, mu) if mu.size else mu, m_poly=m_poly)
    return EllipticVars(**ev)


def membership_residual(curve: CurveData, var, xi) -> float:
    """max |xi^2 - sign R(var)| / (1 + |R(var)|)."""
    var = np.atleast_1d(var)
    if var.size == 0:
        return 0.0
    r = curve.xi_squared(var)
    return float(np.max(np.abs(np.asarray(xi) ** 2 - r) / (1.0 + np.abs(r))))


# ---------------------------------------------------------------------- Dubrovin

def generating_gradient(model, spec: Spectrum, x: PhasePoint, lam: complex, h: float = 1e-7):
    """Central-difference gradient (dF/dp, dF/dq) of F at fixed lambda."""
    z = x.to_complex()
    n = x.N
    g = np.zeros(2 * n, dtype=complex)
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = h
        fp = models.generating_function(model, spec, PhasePoint.from_complex(z + e), lam)
        fm = models.generating_function(model, spec, PhasePoint.from_complex(z - e), lam)
        g[k] = (complex(fp) - complex(fm)) / (2 * h)
    return g[:n], g[n:]


def _t_lambda_rhs(lam, grad_h):
    def rhs(model, spec, x):
        gp, gq = generating_gradient(model, spec, x, lam, grad_h)
        return -gq, gp
    return rhs


def _match(ref, moved):
    """Pair each reference root with its nearest moved root; raise when ambiguous."""
    ref = np.asarray(ref)
    moved = np.asarray(moved)
    if ref.size < 2:
        return moved
    gap = _min_gap(ref)
    idx = np.argmin(np.abs(ref[:, None] - moved[None, :]), axis=1)
    if len(set(idx.tolist())) != ref.size or np.any(np.abs(ref - moved[idx]) > gap / 2):
        raise RootTrackingError("roots moved by more than half their separation")
    return moved[idx]


def dubrovin_rates(model, spec: Spectrum, x: PhasePoint, lam: complex) -> np.ndarray:
    """Right-hand sides of the Dubrovin equations for the tracked variables.

    lpKdV: d nu_k / dt = -4 xi_k n(lambda) / (alpha(lambda) (lambda - nu_k) n'(nu_k)),
    with xi_k = alpha(nu_k) L11(nu_k).
    lSKdV: d mu_k^2 / dt = 2 xi_k m(zeta) / (alpha(zeta) (zeta - mu_k^2) m'(mu_k^2)).
    """
    model = Model.parse(model)
    ev = elliptic_variables(model, spec, x)
    if model is Model.LPKDV:
        roots, xi, poly, factor, var = ev.nu, ev.xi_nu, ev.n_poly, -4.0, complex(lam)
    elif model is Model.LSKDV:
        roots, xi, poly, factor, var = ev.mu, ev.xi_mu, ev.m_poly, 2.0, complex(lam) ** 2
    else:
        raise ValueError("Dubrovin equations are implemented for lpKdV and lSKdV only")
    alv = complex(algebra.poly_eval(models.alpha_poly(model, spec), var))
    dpoly = np.polynomial.polynomial.polyder(poly)
    pv = complex(algebra.poly_eval(poly, var))
    return factor * xi * pv / (alv * (var - roots) * algebra.poly_eval(dpoly, roots))


def _tracked(model, spec, x):
    ev = elliptic_variables(model, spec, x)
    return ev.nu if Model.parse(model) is Model.LPKDV else ev.mu


def dubrovin_residual(model, spec: Spectrum, x: PhasePoint, lambda_probe: complex,
                      h: float = 1e-5, tol: float = 1e-13, grad_h: float = 1e-7) -> float:
    """max_k |central difference of the tracked root - Dubrovin rate| / (1 + |rate|).

    The t_lambda flow is the canonical flow of F_lambda with finite-difference
    gradients, run for +h and -h.
    """
    model = Model.parse(model)
    rhs = _t_lambda_rhs(complex(lambda_probe), grad_h)
    r0 = _tracked(model, spec, x)
    rp = _match(r0, _tracked(model, spec, integrate(model, spec, x, h, tol, rhs=rhs)[0]))
    rm = _match(r0, _tracked(model, spec, integrate(model, spec, x, -h, tol, rhs=rhs)[0]))
    fd = (rp - rm) / (2 * h)
    rate = dubrovin_rates(model, spec, x, lambda_probe)
    return float(np.max(np.abs(fd - rate) / (1.0 + np.abs(rate))))
