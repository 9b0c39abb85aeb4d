"""Continuous canonical systems generated by H1 and their compatibility with the maps.

The right-hand sides are the canonical equations p_x = -dH1/dq,
q_x = dH1/dp written out in closed form. Complex phase space is
integrated as 4N real components with an embedded Runge-Kutta pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import models
from .errors import DegenerateInputError, SingularityError, StepFailure
from .maps import FlowConfig, apply_map
from .models import Model, PhasePoint, Spectrum, inner

QQ_FLOOR = 1e-10


@dataclass(frozen=True)
class FlowResult:
    """End state of a canonical flow with its integral drift.

    ``drift[j]`` is |F_j(t) - F_j(0)| / (1 + |F_j(0)|). ``accurate`` is
    False when the drift exceeds ``10 * tol``.
    """

    state: PhasePoint
    t: float
    drift: np.ndarray
    nfev: int
    nsteps: int
    accurate: bool


def canonical_rhs(model, spec: Spectrum, x: PhasePoint) -> tuple[np.ndarray, np.ndarray]:
    """(p_x, q_x) = (-dH1/dq, dH1/dp)."""
    model = Model.parse(model)
    a, p, q = spec.alpha, x.p, x.q
    if model is Model.LPKDV:
        qq = inner(q, q)
        if abs(qq) <= QQ_FLOOR:
            raise SingularityError("<q,q> vanishes along the flow")
        v = models.csqrt(qq)
        w = inner(p, q) / v
        return v * p - a * q + w * q, p - v * q
    if model is Model.LPMKDV:
        app, aqq = inner(a * p, p), inner(a * q, q)
        return 0.5 * a * a * p - app * a * q, aqq * a * p - 0.5 * a * a * q
    pq, aqq = inner(p, q), inner(a * q, q)
    d = 0.5 * a * a + pq - 0.5 * aqq
    return -d * p + pq * a * q, -a * p + d * q


def h1_gradient_fd(model, spec: Spectrum, x: PhasePoint, h: float = 1e-6):
    """Central differences of H1; returns (dH/dp, dH/dq)."""
    n = x.N
    z = x.to_complex()
    g = np.zeros(2 * n, dtype=complex)
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = h
        fp = models.hamiltonian_h1(model, spec, PhasePoint.from_complex(z + e))
        fm = models.hamiltonian_h1(model, spec, PhasePoint.from_complex(z - e))
        g[k] = (fp - fm) / (2 * h)
    return g[:n], g[n:]


def _vector_field(model, spec, rhs):
    # real layout (Re p, Re q, Im p, Im q), the same as PhasePoint.to_real
    def f(_t, y):
        x = PhasePoint.from_real(y)
        dp, dq = rhs(model, spec, x)
        dz = np.concatenate([dp, dq])
        return np.concatenate([dz.real, dz.imag])

    return f


def integrate(model, spec: Spectrum, x0: PhasePoint, t: float, tol: float = 1e-10,
              rhs=canonical_rhs):
    """Raw integration; returns (state, solve_ivp result)."""
    model = Model.parse(model)
    if t == 0:
        return x0, None
    f = _vector_field(model, spec, rhs)
    try:
        sol = solve_ivp(f, (0.0, float(t)), x0.to_real(), method="DOP853",
                        rtol=tol, atol=tol * 1e-2)
    except SingularityError:
        raise
    except (DegenerateInputError, FloatingPointError) as exc:
        raise SingularityError(str(exc)) from exc
    if sol.status != 0:
        raise StepFailure(f"integrator failed: {sol.message}", float(sol.t[-1]))
    return PhasePoint.from_real(sol.y[:, -1]), sol


def flow(model, spec: Spectrum, x0: PhasePoint, t: float, tol: float = 1e-10) -> FlowResult:
    """Solve the canonical system from x0 up to time t."""
    model = Model.parse(model)
    I0 = models.integrals(model, spec, x0)
    x, sol = integrate(model, spec, x0, t, tol)
    if sol is None:
        return FlowResult(x0, 0.0, np.zeros(I0.size), 0, 0, True)
    drift = np.abs(models.integrals(model, spec, x) - I0) / (1.0 + np.abs(I0))
    return FlowResult(x, float(t), drift, int(sol.nfev), int(sol.t.size - 1),
                      bool(np.all(drift <= 10 * tol)))


def flow_map_commutator(model, spec: Spectrum, flow_cfg: FlowConfig, x0: PhasePoint,
                        t: float, tol: float = 1e-12) -> float:
    """|S(phi_t x0) - phi_t(S x0)| / (1 + |S x0|)."""
    a, _ = apply_map(model, spec, flow_cfg, integrate(model, spec, x0, t, tol)[0])
    sx, _ = apply_map(model, spec, flow_cfg, x0)
    b = integrate(model, spec, sx, t, tol)[0]
    return a.distance(b) / (1.0 + sx.norm())


def _z_pair(spec, flow_cfg, x):
    """(z_0, z_1) along x, S x with z_m = b_m + sqrt(<q_m,q_m>)."""
    z = []
    for _ in range(2):
        xn, params = apply_map(Model.LPKDV, spec, flow_cfg, x)
        z.append(params.b + models.csqrt(inner(x.q, x.q)))
        x = xn
    return z[0], z[1]


def z_evolution_residual(spec: Spectrum, beta: complex, sigma: int, x0: PhasePoint,
                         h: float = 1e-4, tol: float = 1e-13) -> float:
    """|d/dx (z_1 + z_0) - (z_1^2 - z_0^2)| for lpKdV, by central differences in x."""
    cfg = FlowConfig(beta, sigma)
    zp = sum(_z_pair(spec, cfg, integrate(Model.LPKDV, spec, x0, h, tol)[0]))
    zm = sum(_z_pair(spec, cfg, integrate(Model.LPKDV, spec, x0, -h, tol)[0]))
    z0, z1 = _z_pair(spec, cfg, x0)
    return float(abs((zp - zm) / (2 * h) - (z1 * z1 - z0 * z0)))


def z_evolution_richardson(spec: Spectrum, beta: complex, sigma: int, x0: PhasePoint,
                           h: float = 1e-4, tol: float = 1e-13) -> tuple[float, float]:
    """Residuals at h and h/2; their ratio is about 4 while truncation dominates."""
    return (z_evolution_residual(spec, beta, sigma, x0, h, tol),
            z_evolution_residual(spec, beta, sigma, x0, h / 2, tol))
