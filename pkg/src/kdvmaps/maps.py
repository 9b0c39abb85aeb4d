"""Symplectic maps S_beta, discrete orbits, commuting-flow lattices and u-fields.

One step of S_beta multiplies each component pair (p_j, q_j) by the Darboux
matrix evaluated at the pole of that component and rescales it by the
principal (alpha_j - beta)^(-1/2) or (alpha_j^2 - beta^2)^(-1/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import DegenerateInputError, GrowthError, StepFailure
from .models import DarbouxParams, Model, PhasePoint, Spectrum

GROWTH_LIMIT = 1e12


@dataclass(frozen=True)
class FlowConfig:
    """Lattice parameter and root choice of one discrete flow.

    ``a_sign`` picks a or -a for lSKdV and is ignored by the other models.
    """

    beta: complex
    sigma: int = 1
    a_sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "beta", complex(self.beta))
        if self.sigma not in (1, -1) or self.a_sign not in (1, -1):
            raise ValueError("sigma and a_sign must be +1 or -1")


@dataclass
class LatticeGrid:
    model: Model
    M: int
    N: int
    states: list  # states[m][n] -> PhasePoint
    m_edges: list  # m_edges[m][n]: params of the step (m,n) -> (m+1,n)
    n_edges: list  # n_edges[m][n]: params of the step (m,n) -> (m,n+1)


@dataclass
class UField:
    u: np.ndarray
    gauge: dict = field(default_factory=dict)
    path_residual: float = 0.0


def _step_components(model: Model, spec: Spectrum, beta: complex,
                     params: DarbouxParams, x: PhasePoint) -> PhasePoint:
    c = models.normalization(model, spec, beta)
    a, p, q = params.a, x.p, x.q
    al = spec.alpha
    if model is Model.LPKDV:
        b = params.b
        return PhasePoint(c * (a * p + (-al + beta + a * b) * q), c * (p + b * q))
    if model is Model.LPMKDV:
        return PhasePoint(c * (a * al * p + beta * q), c * (al * q / a + beta * p))
    k = a - 1.0 / a
    return PhasePoint(c * (a * al * p + beta * beta * q / k), c * (k * p + al * q / a))


def apply_map(model, spec: Spectrum, flow: FlowConfig, x: PhasePoint
              ) -> tuple[PhasePoint, DarbouxParams]:
    """One step x -> S_beta(x); returns the new point and the potentials used."""
    model = Model.parse(model)
    params = models.potential_constraint(model, spec, flow.beta, flow.sigma, x, a_sign=flow.a_sign)
    xt = _step_components(model, spec, flow.beta, params, x)
    size = xt.norm()  # nan or inf whenever a component is
    if not np.isfinite(size) or size > GROWTH_LIMIT:
        raise GrowthError(f"|x| = {size:.3e} exceeds the growth guard")
    return xt, params


def iterate_orbit(model, spec: Spectrum, flow: FlowConfig, x0: PhasePoint,
                  steps: int) -> list[tuple[PhasePoint, DarbouxParams | None]]:
    """Orbit [(x_0, params_0), ..., (x_steps, None)]; params_m drive the step m -> m+1."""
    out: list = []
    x = x0
    for m in range(steps):
        try:
            xn, params = apply_map(model, spec, flow, x)
        except (DegenerateInputError, GrowthError, ArithmeticError) as exc:
            raise StepFailure(f"{type(exc).__name__}: {exc}", m) from exc
        out.append((x, params))
        x = xn
    out.append((x, None))
    return out


def lattice_evolve(model, spec: Spectrum, flow1: FlowConfig, flow2: FlowConfig,
                   x0: PhasePoint, M: int, N: int) -> LatticeGrid:
    """states[m][n] = S1^m S2^n x0, built along n at m = 0 and then along m."""
    model = Model.parse(model)
    states = [[None] * (N + 1) for _ in range(M + 1)]
    m_edges = [[None] * (N + 1) for _ in range(M)]
    n_edges = [[None] * N for _ in range(M + 1)]

    def step(flow, x, where):
        try:
            return apply_map(model, spec, flow, x)
        except (DegenerateInputError, GrowthError, ArithmeticError) as exc:
            raise StepFailure(f"{type(exc).__name__}: {exc}", where) from exc

    states[0][0] = x0
    for n in range(N):
        states[0][n + 1], n_edges[0][n] = step(flow2, states[0][n], (0, n))
    for n in range(N + 1):
        for m in range(M):
            states[m + 1][n], m_edges[m][n] = step(flow1, states[m][n], (m, n))
    # n-edge potentials for m >= 1 are needed by the u extraction (path checks)
    for m in range(1, M + 1):
        for n in range(N):
            n_edges[m][n] = models.potential_constraint(
                model, spec, flow2.beta, flow2.sigma, states[m][n], a_sign=flow2.a_sign)
    return LatticeGrid(model, M, N, states, m_edges, n_edges)


def commutator_residual(model, spec: Spectrum, flow1: FlowConfig, flow2: FlowConfig,
                        x: PhasePoint) -> float:
    """|S1 S2 x - S2 S1 x| / (1 + |x|)."""
    a, _ = apply_map(model, spec, flow1, apply_map(model, spec, flow2, x)[0])
    b, _ = apply_map(model, spec, flow2, apply_map(model, spec, flow1, x)[0])
    return a.distance(b) / (1.0 + x.norm())


# ------------------------------------------------------------------- u-fields

def _lpkdv_z(params: DarbouxParams, x: PhasePoint) -> complex:
    return params.b + models._sqrt_qq(x.q)


def extract_u_lpkdv(grid: LatticeGrid, flow1: FlowConfig, flow2: FlowConfig) -> UField:
    """u with u(0,0) = 0 and edge differences -z, z = b + sqrt(<q,q>)."""
    M, N = grid.M, grid.N
    u = np.zeros((M + 1, N + 1), dtype=complex)
    zm = np.array([[_lpkdv_z(grid.m_edges[m][n], grid.states[m][n]) for n in range(N + 1)]
                   for m in range(M)], dtype=complex).reshape(M, N + 1)
    zn = np.array([[_lpkdv_z(grid.n_edges[m][n], grid.states[m][n]) for n in range(N)]
                   for m in range(M + 1)], dtype=complex).reshape(M + 1, N)
    for n in range(N):
        u[0, n + 1] = u[0, n] - zn[0, n]
    for m in range(M):
        u[m + 1, :] = u[m, :] - zm[m, :]
    path = 0.0
    if M and N:
        d = zm[:, :-1] + zn[1:, :] - zn[:-1, :] - zm[:, 1:]
        path = float(np.max(np.abs(d)) / (1.0 + np.max(np.abs(zm))))
    return UField(u, {"u00": 0.0, "z_m": zm, "z_n": zn}, path)


def _multiplicative(grid: LatticeGrid):
    M, N = grid.M, grid.N
    am = np.array([[grid.m_edges[m][n].a for n in range(N + 1)] for m in range(M)],
                  dtype=complex).reshape(M, N + 1)
    an = np.array([[grid.n_edges[m][n].a for n in range(N)] for m in range(M + 1)],
                  dtype=complex).reshape(M + 1, N)
    if np.any(np.abs(am) <= 1e-300) or np.any(np.abs(an) <= 1e-300) \
            or not (np.all(np.isfinite(am)) and np.all(np.isfinite(an))):
        raise DegenerateInputError("zero or non-finite edge potential")
    z = np.ones((M + 1, N + 1), dtype=complex)
    for n in range(N):
        z[0, n + 1] = z[0, n] * an[0, n]
    for m in range(M):
        z[m + 1, :] = z[m, :] * am[m, :]
    path = 0.0
    if M and N:
        lhs = an[1:, :] * am[:, :-1]
        rhs = am[:, 1:] * an[:-1, :]
        path = float(np.max(np.abs(lhs - rhs) / (np.abs(lhs) + np.abs(rhs))))
    return z, am, an, path


def extract_u_lpmkdv(grid: LatticeGrid) -> UField:
    """u(0,0) = 1 and u multiplied by the edge potential a along every step."""
    z, am, an, path = _multiplicative(grid)
    return UField(z, {"u00": 1.0, "a_m": am, "a_n": an}, path)


def extract_u_lskdv(grid: LatticeGrid) -> UField:
    """z(0,0) = 1, z multiplied by a along every step, u = z^2."""
    z, am, an, path = _multiplicative(grid)
    return UField(z * z, {"z00": 1.0, "z": z, "a_m": am, "a_n": an}, path)


def extract_u(grid: LatticeGrid, flow1: FlowConfig, flow2: FlowConfig) -> UField:
    if grid.model is Model.LPKDV:
        return extract_u_lpkdv(grid, flow1, flow2)
    if grid.model is Model.LPMKDV:
        return extract_u_lpmkdv(grid)
    return extract_u_lskdv(grid)


def lattice_residual(model, u, beta1: complex, beta2: complex) -> dict:
    """Max and mean of the normalized quad-equation residual over all plaquettes.

    ``u`` is a UField or a 2-D array; tilde is the m shift (beta1), bar the n shift (beta2).
    """
    model = Model.parse(model)
    U = u.u if isinstance(u, UField) else np.asarray(u, dtype=complex)
    if U.shape[0] < 2 or U.shape[1] < 2:
        raise ValueError("need at least a 2x2 grid")
    u0, ut, ub, utb = U[:-1, :-1], U[1:, :-1], U[:-1, 1:], U[1:, 1:]
    b1, b2 = complex(beta1), complex(beta2)
    if model is Model.LPKDV:
        r = (utb - u0) * (ut - ub) - (b2 - b1)
    elif model is Model.LPMKDV:
        r = b1 * (ub * utb - u0 * ut) - b2 * (ut * utb - u0 * ub)
    else:
        r = b1 * b1 * (utb - ut) * (ub - u0) - b2 * b2 * (utb - ub) * (ut - u0)
    scale = 1.0 + np.max(np.abs(np.stack([u0, ut, ub, utb])), axis=0)
    res = np.abs(r) / scale ** 2
    return {"max": float(res.max()), "mean": float(res.mean())}
