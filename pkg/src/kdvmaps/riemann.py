"""Periods, Abel map and Riemann theta function of hyperelliptic curves.

The curve is xi^2 = P(x) with P = sign * R. Holomorphic differentials are
omega'_j = x^(g-j) dx / (2 xi), j = 1..g. Branch points are sorted by real
part and joined by the chain of straight segments e_0 -> e_1 -> ... ; the
lift of a segment traversed on both sheets is a closed cycle gamma_k. The
a-cycles are gamma_0, gamma_2, ... and the b-cycles are built from the
odd-numbered gammas, with orientations chosen so that the normalized
period matrix is symmetric with positive definite imaginary part.

Along every path xi is continued by sign continuity between consecutive
quadrature nodes; the node count doubles until the integral settles.
Only genus 1 and 2 are supported.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import algebra, models, spectral
from .errors import DegenerateCurveError, QuadratureError
from .maps import FlowConfig, iterate_orbit
from .models import Model, PhasePoint, Spectrum
from .spectral import CurveData

log = logging.getLogger(__name__)

QUAD_TOL = 1e-13
THETA_TAIL = 1e-12
CUTOFF_RADIUS = 50.0


@dataclass(frozen=True)
class PeriodData:
    """Periods of the unnormalized and normalized differentials.

    ``A[j, k]`` and ``Bp[j, k]`` integrate omega'_j over a_k and b_k;
    C = A^-1 and B = C Bp. ``cycles`` records how the a/b cycles are
    assembled from the segment cycles gamma_k (index, sign) pairs.
    """

    A: np.ndarray
    Bp: np.ndarray
    C: np.ndarray
    B: np.ndarray
    branch_points: np.ndarray
    cycles: dict = field(default_factory=dict)
    segments: np.ndarray = field(default=None, repr=False)

    @property
    def genus(self) -> int:
        return int(self.B.shape[0])


@dataclass(frozen=True)
class ThetaParams:
    B: np.ndarray
    R_trunc: int = 3


# ----------------------------------------------------------------- curve access

def curve_from_polynomial(P, model=None) -> CurveData:
    """CurveData for xi^2 = P(x) given lowest-first coefficients."""
    P = algebra.trim(P)
    deg = P.size - 1
    roots = algebra.poly_roots(P)
    g = (deg - 1) // 2
    return CurveData(model, P, g, spectral._sort_points(roots), 1, spectral._degenerate(roots))


def _P(curve: CurveData) -> np.ndarray:
    return curve.sign * np.asarray(curve.R, dtype=complex)


def _odd(curve: CurveData) -> bool:
    return (algebra.trim(curve.R).size - 1) % 2 == 1


def _continue(w: np.ndarray, start: complex | None = None) -> np.ndarray:
    """Fix signs of square-root samples so consecutive values are close."""
    w = np.array(w, dtype=complex)
    prev = start
    for k in range(w.size):
        if prev is not None:
            if abs(w[k] - prev) > abs(w[k] + prev):
                w[k] = -w[k]
            lo, hi = sorted((abs(w[k] - prev), abs(w[k] + prev)))
            if hi > 0 and lo > 0.5 * hi:
                raise QuadratureError("ambiguous square-root continuation", complex(w[k]))
        prev = w[k]
    return w


def _adaptive(xmap, radicand, integrand, w0=None, tol=QUAD_TOL, open_end=False):
    """Integrate integrand(t, x, w) over t in [0, 1] with adaptive Gauss-Legendre panels.

    w is sqrt(radicand(t)) continued from ``w0`` (free when None). A panel
    is accepted when 16 and 32 nodes agree; otherwise it is halved. Returns
    (value, w, x) at t = 1, or at the last node when ``open_end``.
    """
    nodes = {n: algebra.leggauss01(n) for n in (16, 32)}

    def panel(t0, t1, w_in, depth):
        vals = []
        for n in (16, 32):
            tau, wt = nodes[n]
            t = t0 + (t1 - t0) * tau
            if not (open_end and t1 == 1.0):
                t = np.concatenate([t, [t1]])
            x = xmap(t)
            try:
                w = _continue(algebra.csqrt(radicand(t, x)), w_in)
            except QuadratureError:
                vals = None
                break
            f = integrand(t, x, w)
            vals.append(((f[:, :n] @ wt) * (t1 - t0), w[-1], x[-1]))
        if vals is not None:
            (v1, _, _), (v2, w_end, x_end) = vals
            if np.max(np.abs(v1 - v2)) <= tol * max(1.0, np.max(np.abs(v2))):
                return v2, w_end, x_end
        if depth > 40:
            raise QuadratureError("adaptive quadrature did not converge", complex(xmap(np.array([t0]))[0]))
        tm = 0.5 * (t0 + t1)
        left, w_mid, _ = panel(t0, tm, w_in, depth + 1)
        right, w_end, x_end = panel(tm, t1, w_mid, depth + 1)
        return left + right, w_end, x_end

    return panel(0.0, 1.0, w0, 0)


def _powers(x, g):
    return np.array([x ** (g - j) for j in range(1, g + 1)])


# --------------------------------------------------------------- segment cycles

def _segment_cycle(P, ea, eb, others, g):
    """2 * integral of omega' from branch point ea to branch point eb (one sheet)."""
    lc = P[-1]
    half = 0.5 * (eb - ea)
    mid = 0.5 * (ea + eb)

    def xmap(t):
        return mid - half * np.cos(np.pi * t)

    def radicand(t, x):
        return lc * np.prod(x[None, :] - others[:, None], axis=0)

    def integrand(t, x, w):
        # sqrt((x - ea)(x - eb)) = i * half * sin(pi t) cancels the Jacobian
        return _powers(x, g) / (2j * w) * np.pi

    return 2.0 * _adaptive(xmap, radicand, integrand)[0]


def period_matrix(curve: CurveData) -> PeriodData:
    """a/b periods along the branch-point chain, normalized to C and B."""
    if curve.degenerate:
        raise DegenerateCurveError("degenerate curve: repeated branch points")
    g = curve.genus
    if g not in (1, 2):
        raise ValueError("period computation supports genus 1 and 2")
    P = _P(curve)
    e = np.asarray(curve.branch_points)
    gam = []
    for k in range(2 * g):
        others = np.delete(e, [k, k + 1])
        gam.append(_segment_cycle(P, e[k], e[k + 1], others, g))
    gam = np.array(gam).T  # gam[j, k]: omega'_j over gamma_k
    for b_rule, signs in itertools.product(_B_RULES[g], itertools.product((1, -1), repeat=2 * g)):
        a_idx = [(2 * i, signs[2 * i]) for i in range(g)]
        b_idx = [[(k, signs[k]) for k in rule] for rule in b_rule]
        A = np.stack([s * gam[:, k] for k, s in a_idx], axis=1)
        Bp = np.stack([sum(s * gam[:, k] for k, s in row) for row in b_idx], axis=1)
        C = np.linalg.inv(A)
        B = C @ Bp
        if _riemann_ok(B):
            return PeriodData(A, Bp, C, 0.5 * (B + B.T), e, {"a": a_idx, "b": b_idx}, gam)
    raise DegenerateCurveError("no cycle orientation gives a Riemann matrix")


# b-cycles as sums of odd segment cycles
_B_RULES = {1: [[[1]]], 2: [[[1, 3], [3]], [[1], [1, 3]], [[1], [3]]]}


def _riemann_ok(B, tol=1e-8) -> bool:
    if np.max(np.abs(B - B.T)) > tol * (1 + np.max(np.abs(B))):
        return False
    im = 0.5 * (B + B.T).imag
    return all(np.linalg.det(im[:k, :k]) > 0 for k in range(1, im.shape[0] + 1))


# ------------------------------------------------------------------------ paths

def _clearance(e):
    return 0.1 * spectral._min_gap(np.asarray(e)) if len(e) > 1 else 0.1


def _route(start, end, e, skip):
    """Polyline from start to end keeping clear of branch points not in ``skip``."""
    clear = _clearance(e)
    pts = [complex(start), complex(end)]
    for _ in range(8):
        moved = False
        for i in range(len(pts) - 1):
            a, b = pts[i], pts[i + 1]
            d = b - a
            if d == 0:
                continue
            for c in e:
                if any(abs(c - s) < 1e-14 for s in skip):
                    continue
                s = np.clip(((c - a) * np.conj(d)).real / abs(d) ** 2, 0, 1)
                near = a + s * d
                if abs(c - near) < clear and 0 < s < 1:
                    nrm = 1j * d / abs(d)
                    side = 1 if ((near - c) * np.conj(nrm)).real >= 0 else -1
                    pts.insert(i + 1, c + side * 2 * clear * nrm)
                    moved = True
                    break
            if moved:
                break
        if not moved:
            return pts
    raise QuadratureError("could not route the path around the branch points")


def _path_from_branch(P, e0, pts, g, others):
    """Integral of omega' from branch point e0 along the polyline pts (pts[0] = e0).

    Returns (value, xi at the end of the path).
    """
    lc = P[-1]
    d = pts[1] - e0
    rd = algebra.csqrt(d)
    # x = e0 + d s^2 removes the inverse square root at the branch point
    total, w, _ = _adaptive(lambda s: e0 + d * s * s,
                         lambda s, x: lc * np.prod(x[None, :] - others[:, None], axis=0),
                         lambda s, x, w: _powers(x, g) * rd / w)
    xi = rd * w
    for a, b in zip(pts[1:-1], pts[2:]):
        v, xi, _ = _leg(P, a, b, xi, g)
        total = total + v
    return total, xi


def _leg(P, a, b, xi_a, g):
    return _adaptive(lambda t: a + (b - a) * t,
                     lambda t, x: algebra.poly_eval(P, x),
                     lambda t, x, w: _powers(x, g) / (2 * w) * (b - a), xi_a)


def abel_map(curve: CurveData, periods: PeriodData, point) -> np.ndarray:
    """Normalized Abel map of the point (x, xi) with base point at the first branch point.

    The path is a polyline avoiding other branch points; the sheet of the
    endpoint is matched against ``xi`` (A(tau p) = -A(p) for this base point).
    """
    x, xi = complex(point[0]), complex(point[1])
    P = _P(curve)
    e = np.asarray(periods.branch_points)
    e0 = e[0]
    hit = np.flatnonzero(np.abs(e - x) <= 1e-12 * (1.0 + np.abs(e)))
    if hit.size:
        # half-periods: the sign of each half segment is irrelevant mod the lattice
        return periods.C @ (0.5 * periods.segments[:, :hit[0]].sum(axis=1))
    others = e[1:]
    pts = _route(e0, x, e, skip=[e0, x])
    val, xi_end = _path_from_branch(P, e0, pts, periods.genus, others)
    sgn = 1.0 if abs(xi_end - xi) <= abs(xi_end + xi) else -1.0
    return periods.C @ (sgn * val)


def abel_infinity(curve: CurveData, periods: PeriodData, which: str = "inf") -> np.ndarray:
    """Abel map of a point at infinity.

    ``which`` is "inf" for the branch point at infinity of odd-degree
    curves and "inf+" / "inf-" for the two infinities of even-degree curves,
    where xi ~ +x^(g+1) or -x^(g+1) (R monic).
    """
    P = _P(curve)
    g = periods.genus
    e = np.asarray(periods.branch_points)
    odd = _odd(curve)
    if odd != (which == "inf"):
        raise ValueError(f"{which!r} does not name an infinity of this curve")
    X = CUTOFF_RADIUS * (1.0 + np.max(np.abs(e))) * np.exp(0.1j)
    pts = _route(e[0], X, e, skip=[e[0]])
    head, xi_X = _path_from_branch(P, e[0], pts, g, e[1:])

    # x = X / u^2 (odd) or X / u (even), u = 1 - t; w = xi * u^k stays bounded
    pw, k = (2, 2 * g + 1) if odd else (1, g + 1)

    def xmap(t):
        return X / (1.0 - t) ** pw

    def radicand(t, x):
        return algebra.poly_eval(P, x) * (1.0 - t) ** (2 * k)

    def integrand(t, x, w):
        u = 1.0 - t
        return _powers(x, g) * u ** k / (2 * w) * pw * X / u ** (pw + 1)

    tail, w_end, _ = _adaptive(xmap, radicand, integrand, xi_X, open_end=True)
    if odd:
        return periods.C @ (head + tail)
    # on this path xi ~ lead * x^(g+1); P monic up to its sign convention
    target = 1.0 if which == "inf+" else -1.0
    c = algebra.csqrt(P[-1])
    lead = w_end / X ** (g + 1)
    sgn = 1.0 if abs(lead - target * c) <= abs(lead + target * c) else -1.0
    return periods.C @ (sgn * (head + tail))


# ----------------------------------------------------------------- lattice/theta

def reduce_mod_lattice(z, B, search: int = 1) -> np.ndarray:
    """Representative of z modulo Z^g + B Z^g with (near) minimal norm.

    Coordinates in the real lattice basis are rounded and a box of
    +-``search`` around the rounded coefficients is scanned.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    g = z.size
    m = np.linalg.solve(B.imag, z.imag)
    n = z.real - B.real @ m
    m0, n0 = np.round(m), np.round(n)
    best, best_norm = None, np.inf
    for dm in itertools.product(range(-search, search + 1), repeat=g):
        for dn in itertools.product(range(-search, search + 1), repeat=g):
            mm, nn = m0 + np.array(dm), n0 + np.array(dn)
            cand = z - nn - B @ mm
            nr = np.linalg.norm(cand)
            if nr < best_norm - 1e-15:
                best, best_norm = cand, nr
    return best


def theta(z, params: ThetaParams) -> complex:
    """Riemann theta function by a truncated lattice sum.

    The truncation radius grows until every term on the outer shell is
    below 1e-12 in modulus.
    """
    B = np.atleast_2d(np.asarray(params.B, dtype=complex))
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    g = z.size
    im = 0.5 * (B + B.T).imag
    if np.any(np.linalg.eigvalsh(im) <= 0):
        raise ValueError("Im B is not positive definite; the theta series diverges")
    R = max(1, int(params.R_trunc))
    while True:
        grid = np.array(list(itertools.product(range(-R, R + 1), repeat=g)), dtype=float)
        expo = np.pi * 1j * (np.einsum("ki,ij,kj->k", grid, B, grid) + 2 * grid @ z)
        shell = np.max(np.abs(grid), axis=1) == R
        if np.max(np.exp(expo[shell].real)) < THETA_TAIL:
            return complex(np.sum(np.exp(expo)))
        R += 1
        if R > 60:
            raise ValueError("theta series did not reach the tail bound")


# ------------------------------------------------------------ Jacobi linearity

@dataclass(frozen=True)
class JacobiConfig:
    """How the step vector is formed: Omega = orientation * int_{p(beta)}^{anchor} omega."""

    anchor: str
    sheet: int
    orientation: int
    stride: int = 1

    def label(self) -> str:
        return f"anchor={self.anchor} sheet={self.sheet:+d} orientation={self.orientation:+d} stride={self.stride}"


@dataclass
class JacobiScan:
    residuals: np.ndarray
    config: JacobiConfig
    table: dict
    periods: PeriodData
    omegas: dict


def _anchors(model: Model, odd: bool):
    if odd:
        return ["inf"]
    out = ["inf-", "inf+", "inf+-"]
    if model is Model.LSKDV:
        out.append("zero")
    return out


def _anchor_point(curve, periods, anchor):
    if anchor == "zero":
        return abel_map(curve, periods, (0.0, 0.0))
    if anchor == "inf+-":
        return abel_infinity(curve, periods, "inf+") + abel_infinity(curve, periods, "inf-")
    return abel_infinity(curve, periods, anchor)


def divisor_image(model, spec, curve, periods, x) -> np.ndarray:
    """Sum of the Abel images of the lifted zeros of L21."""
    ev = spectral.elliptic_variables(model, spec, x)
    total = np.zeros(periods.genus, dtype=complex)
    for v, xi in zip(ev.nu, ev.xi_nu):
        total = total + abel_map(curve, periods, (v, xi))
    return total


def jacobi_linearity_residual(model, spec: Spectrum, flow: FlowConfig, x0: PhasePoint,
                              steps: int = 10, configs=None) -> JacobiScan:
    """Lattice-reduced |phi(m) - phi(0) - (m / stride) Omega| for each step m.

    Every configuration (anchor, sheet of p(beta), orientation, stride) is
    scanned; the one with the smallest maximal residual is returned together
    with the whole table.
    """
    model = Model.parse(model)
    curve = spectral.spectral_curve(model, spec, x0)
    if curve.degenerate:
        raise DegenerateCurveError("degenerate curve: repeated branch points")
    periods = period_matrix(curve)
    orbit = iterate_orbit(model, spec, flow, x0, steps)
    phi = np.array([divisor_image(model, spec, curve, periods, y) for y, _ in orbit])
    var = models.spectral_variable(model, flow.beta)
    xi_b = models.curve_sqrt_at(model, spec, x0, flow.beta)
    odd = _odd(curve)
    if configs is None:
        configs = [JacobiConfig(a, s, o, st) for a in _anchors(model, odd)
                   for s in (1, -1) for o in (1, -1) for st in (1, 2)]
    omegas, table, best = {}, {}, None
    for cfg in configs:
        key = (cfg.anchor, cfg.sheet)
        if key not in omegas:
            pb = abel_map(curve, periods, (var, cfg.sheet * flow.sigma * xi_b))
            weight = 2 if cfg.anchor == "inf+-" else 1
            omegas[key] = _anchor_point(curve, periods, cfg.anchor) - weight * pb
        om = cfg.orientation * omegas[key]
        res = np.zeros(steps + 1)
        for m in range(steps + 1):
            k, r = divmod(m, cfg.stride)
            base = phi[r]
            res[m] = np.linalg.norm(reduce_mod_lattice(phi[m] - base - k * om, periods.B))
        table[cfg] = float(res.max())
        if best is None or table[cfg] < table[best[0]]:
            best = (cfg, res)
    log.info("jacobi linearity: best %s with max residual %.3e", best[0].label(), table[best[0]])
    return JacobiScan(best[1], best[0], table, periods, omegas)

