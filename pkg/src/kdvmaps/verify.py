"""Property checks for the maps and the consolidated suite runner.

All derivatives are central finite differences taken along real
perturbations of the coordinates; for holomorphic observables these are
the complex derivatives. Residuals are normalized so that the tolerances
in ``TOLERANCES`` are scale-free.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import algebra, hamiltonian, maps, models, riemann, sampling, spectral
from .errors import DegenerateCurveError, StepFailure
from .maps import FlowConfig
from .models import DarbouxParams, Model, PhasePoint, Spectrum

log = logging.getLogger(__name__)

TOLERANCES = {
    "commutativity": 1e-9,
    "conservation": 1e-9,
    "curve_invariance": 1e-10,
    "determinant": 1e-13,
    "dubrovin": 1e-5,
    "flow_drift": 1e-8,
    "flow_map": 1e-6,
    "involution": 1e-6,
    "jacobi": 1e-6,
    "lattice": 1e-8,
    "lax": 1e-11,
    "rmatrix": 1e-5,
    "symplecticity": 1e-6,
    "z_evolution": 1e-6,
}

CHECKS = tuple(sorted(TOLERANCES))

# applicability beyond "every model, every N"
_ONLY = {
    "dubrovin": lambda m, n: m is Model.LPKDV or (m is Model.LSKDV and n == 1),
    "z_evolution": lambda m, n: m is Model.LPKDV,
    "jacobi": lambda m, n: spectral.genus(m, n) == 1,
}


# ------------------------------------------------------------------- brackets

def _grad(f, x: PhasePoint, h: float):
    """Central-difference gradient of a (possibly array-valued) observable."""
    z = x.to_complex()
    n = x.N
    cols = []
    for k in range(2 * n):
        e = np.zeros(2 * n)
        e[k] = h
        fp = np.asarray(f(PhasePoint.from_complex(z + e)), dtype=complex)
        fm = np.asarray(f(PhasePoint.from_complex(z - e)), dtype=complex)
        cols.append((fp - fm) / (2 * h))
    g = np.stack(cols, axis=-1)
    return g[..., :n], g[..., n:]


def poisson_bracket(f, g, x: PhasePoint, h: float = 1e-6) -> complex:
    """{f, g} = sum_j df/dp_j dg/dq_j - df/dq_j dg/dp_j."""
    fp, fq = _grad(f, x, h)
    gp, gq = _grad(g, x, h)
    return complex(np.sum(fp * gq - fq * gp))


def involution_residual(model, spec: Spectrum, x: PhasePoint, h: float = 1e-6) -> float:
    """max_{j<k} |{F_j, F_k}| / (1 + |grad F_j| |grad F_k|)."""
    fp, fq = _grad(lambda y: models.integrals(model, spec, y), x, h)
    worst = 0.0
    for j in range(fp.shape[0]):
        for k in range(j + 1, fp.shape[0]):
            br = np.sum(fp[j] * fq[k] - fq[j] * fp[k])
            scale = 1.0 + np.linalg.norm(np.r_[fp[j], fq[j]]) * np.linalg.norm(np.r_[fp[k], fq[k]])
            worst = max(worst, abs(br) / scale)
    return float(worst)


# --------------------------------------------------------------- symplecticity

def continued_map(model, spec: Spectrum, flow: FlowConfig, x0: PhasePoint, corrupt: bool = False):
    """The map near x0 with its square-root branches continued from x0.

    Real data can put the curve radicand on the principal cut, where a
    perturbation would otherwise jump to the other root.
    """
    model = Model.parse(model)
    r0 = models.curve_sqrt_at(model, spec, x0, flow.beta)
    a0 = models.potential_constraint(model, spec, flow.beta, flow.sigma, x0, a_sign=flow.a_sign).a

    def step(x):
        r = models.curve_sqrt_at(model, spec, x, flow.beta)
        sigma = flow.sigma if abs(r - r0) <= abs(r + r0) else -flow.sigma
        params = models.potential_constraint(model, spec, flow.beta, sigma, x, a_sign=flow.a_sign)
        if model is Model.LSKDV and abs(params.a + a0) < abs(params.a - a0):
            params = models.potential_constraint(model, spec, flow.beta, sigma, x,
                                                 a_sign=-flow.a_sign)
        y = maps._step_components(model, spec, flow.beta, params, x)
        return _corrupted(y) if corrupt else y

    return step


def _corrupted(y: PhasePoint) -> PhasePoint:
    # test hook: a small non-symplectic distortion of the image
    return PhasePoint(y.p * (1.0 + 1e-3), y.q)


def _omegas(n):
    I = np.eye(n)
    Z = np.zeros((n, n))
    re = np.block([[Z, I, Z, Z], [-I, Z, Z, Z], [Z, Z, Z, -I], [Z, Z, I, Z]])
    im = np.block([[Z, Z, Z, I], [Z, Z, -I, Z], [Z, I, Z, Z], [-I, Z, Z, Z]])
    return re, im


def symplecticity_residual(model, spec: Spectrum, flow: FlowConfig, x: PhasePoint,
                           h: float = 1e-6, corrupt: bool = False) -> float:
    """max |J^T W J - W| over the real and imaginary parts W of dp^dq.

    J is the 4N x 4N five-point central-difference Jacobian in the real
    layout (Re p, Re q, Im p, Im q). The fourth-order stencil keeps the
    truncation error small where the map has large higher derivatives.
    """
    step = continued_map(model, spec, flow, x, corrupt)
    y0 = x.to_real()
    J = np.zeros((y0.size, y0.size))
    for k in range(y0.size):
        e = np.zeros(y0.size)
        e[k] = h
        f = [step(PhasePoint.from_real(y0 + t * e)).to_real() for t in (2, 1, -1, -2)]
        J[:, k] = (-f[0] + 8 * f[1] - 8 * f[2] + f[3]) / (12 * h)
    return float(max(np.max(np.abs(J.T @ W @ J - W)) for W in _omegas(x.N)))


# ------------------------------------------------------------------ r-matrices

def _lax_gradients(model, spec, x, lam, h):
    return _grad(lambda y: models.lax_matrix(model, spec, y, lam), x, h)


def lax_bracket(model, spec: Spectrum, x: PhasePoint, lam: complex, mu: complex,
                h: float = 1e-6) -> np.ndarray:
    """4x4 array {L(lam) (x) L(mu)} with entry [2i+k, 2j+l] = {L_ij(lam), L_kl(mu)}.

    The bracket here is the one generating the canonical flows,
    df/dt = {f, H} for p_t = -dH/dq, q_t = dH/dp, which is minus
    ``poisson_bracket``.
    """
    ap, aq = _lax_gradients(model, spec, x, lam, h)
    bp, bq = _lax_gradients(model, spec, x, mu, h)
    br = np.einsum("ijn,kln->ikjl", aq, bp) - np.einsum("ijn,kln->ikjl", ap, bq)
    return br.reshape(4, 4)


def _rmatrix_rhs(model, spec, x, lam, mu):
    L = models.lax_matrix(model, spec, x, lam)
    M = models.lax_matrix(model, spec, x, mu)
    I = np.eye(2)
    L1, L2 = np.kron(L, I), np.kron(I, M)

    def com(r, A):
        return r @ A - A @ r

    if model is Model.LPKDV:
        v = models._sqrt_qq(x.q)
        c, d = 2.0 / (lam - mu), 2.0 / (mu - lam)
        r12 = np.array([[c, 0, -1 / v, 0], [0, 0, c, 1 / v], [0, c, 0, 0], [0, 0, 0, c]])
        r21 = np.array([[d, -1 / v, 0, 0], [0, 0, d, 0], [0, d, 0, 1 / v], [0, 0, 0, d]])
        return com(r12, L1) - com(r21, L2)
    if model is Model.LPMKDV:
        def r12(s, t):
            return 2 * s / (s * s - t * t) * np.array(
                [[s, 0, 0, 0], [0, 0, t, 0], [0, t, 0, 0], [0, 0, 0, s]])
        return com(r12(lam, mu), L1) - com(r12(mu, lam), L2)

    def P(s, t):
        return np.array([[s, 0, 0, 0], [0, 0, t, 0], [0, t, 0, 0], [0, 0, 0, s]])

    s3, sp = np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [0.0, 0.0]])
    k = 2.0 / (lam * lam - mu * mu)
    r = k * P(mu, lam) + np.kron(s3, sp)
    # the constant part of r' carries the tensor factors in swapped order
    rp = k * P(lam, mu) - np.kron(sp, s3)
    return com(r, L1) + com(rp, L2)


def rmatrix_residual(model, spec: Spectrum, x: PhasePoint, lam: complex, mu: complex,
                     h: float = 1e-6) -> float:
    """Max-entry mismatch of the fundamental bracket, relative to the larger side."""
    model = Model.parse(model)
    lam, mu = complex(lam), complex(mu)
    if lam == mu or (model.squared and abs(lam * lam - mu * mu) < 1e-12):
        raise ValueError("coincident spectral parameters")
    lhs = lax_bracket(model, spec, x, lam, mu, h)
    rhs = _rmatrix_rhs(model, spec, x, lam, mu)
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300))


# ----------------------------------------------------------- map-level checks

def lax_residual(model, spec: Spectrum, flow: FlowConfig, x: PhasePoint, lams,
                 corrupt: bool = False) -> float:
    """max over lams of |L(Sx) D - D L(x)| / max(|L(Sx) D|, |D L(x)|)."""
    model = Model.parse(model)
    y, params = maps.apply_map(model, spec, flow, x)
    if corrupt:
        y = _corrupted(y)
    worst = 0.0
    for lam in np.atleast_1d(lams):
        D = models.darboux_matrix(model, flow.beta, params, lam)
        a = algebra.mat2_mul(models.lax_matrix(model, spec, y, lam), D)
        b = algebra.mat2_mul(D, models.lax_matrix(model, spec, x, lam))
        worst = max(worst, algebra.max_norm(a - b) / max(algebra.max_norm(a), algebra.max_norm(b)))
    return float(worst)


def determinant_residual(model, beta: complex, params: DarbouxParams, lam: complex) -> float:
    """|det D - (lam - beta)| or |det D - (lam^2 - beta^2)|, relative."""
    model = Model.parse(model)
    target = lam - beta if model is Model.LPKDV else lam * lam - beta * beta
    det = algebra.det2(models.darboux_matrix(model, beta, params, lam))
    return float(abs(det - target) / max(abs(target), 1.0))


def conservation_drift(model, spec, flow, x, steps, corrupt=False) -> float:
    """max_j max_m |F_j(x_m) - F_j(x_0)| / (1 + |F_j(x_0)|)."""
    I0 = models.integrals(model, spec, x)
    worst = 0.0
    for _ in range(steps):
        x = maps.apply_map(model, spec, flow, x)[0]
        if corrupt:
            x = _corrupted(x)
        worst = max(worst, float(np.max(np.abs(models.integrals(model, spec, x) - I0)
                                        / (1.0 + np.abs(I0)))))
    return worst


def curve_invariance(model, spec, flow, x) -> float:
    """Relative change of the curve polynomial under one map step."""
    R0 = spectral.spectral_curve(model, spec, x).R
    R1 = spectral.spectral_curve(model, spec, maps.apply_map(model, spec, flow, x)[0]).R
    return float(np.max(np.abs(R1 - R0)) / (1.0 + np.max(np.abs(R0))))


def admissible_pairs(model, spec, flows1, flows2, x) -> list:
    """Branch pairs (f1, f2) for which both composites are defined at x."""
    out = []
    for f1 in flows1:
        for f2 in flows2:
            try:
                maps.commutator_residual(model, spec, f1, f2, x)
            except (ArithmeticError, StepFailure, ValueError) as exc:
                log.debug("pair %s/%s not admissible: %s", f1, f2, exc)
                continue
            out.append((f1, f2))
    return out


# ------------------------------------------------------------------------ suite

@dataclass(frozen=True)
class SuiteConfig:
    """What to run. ``checks`` None means every applicable check."""

    model: str = "lpkdv"
    N: int = 2
    seed: int = 42
    checks: tuple | None = None
    tolerances: dict = field(default_factory=dict)
    corrupt_map: bool = False
    steps: int = 20
    grid: int = 10
    sigmas: tuple = (1, 1)


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    checks: list
    fingerprint: dict
    skipped: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "fingerprint": self.fingerprint,
                "checks": [asdict(c) for c in self.checks], "skipped": list(self.skipped)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _probe_lambdas(rng, model, spec, k):
    r = 1.0 + float(np.max(np.abs(spec.alpha)))
    lam = r * (rng.uniform(0.5, 2.0, k) * np.exp(1j * rng.uniform(0, 2 * np.pi, k)))
    return lam


def _run_check(name, cfg, sample, rng):
    model, spec, x = sample.model, sample.spec, sample.x
    f1 = FlowConfig(sample.betas[0], cfg.sigmas[0])
    f2 = FlowConfig(sample.betas[1], cfg.sigmas[1])
    bad = cfg.corrupt_map
    if name == "conservation":
        return conservation_drift(model, spec, f1, x, cfg.steps, bad), {}
    if name == "involution":
        return involution_residual(model, spec, x), {}
    if name == "symplecticity":
        r1 = symplecticity_residual(model, spec, f1, x, 1e-6, bad)
        r2 = symplecticity_residual(model, spec, f1, x, 5e-7, bad)
        return r1, {"h": [1e-6, 5e-7], "residuals": [r1, r2]}
    if name == "lax":
        worst, y = 0.0, x
        for _ in range(min(cfg.steps, 5)):
            worst = max(worst, lax_residual(model, spec, f1, y, _probe_lambdas(rng, model, spec, 10), bad))
            y = maps.apply_map(model, spec, f1, y)[0]
        return worst, {}
    if name == "commutativity":
        both = [FlowConfig(b, s) for b in (f1.beta,) for s in (1, -1)]
        other = [FlowConfig(f2.beta, s) for s in (1, -1)]
        pairs = admissible_pairs(model, spec, both, other, x)
        res = [maps.commutator_residual(model, spec, a, b, x) for a, b in pairs]
        if bad:
            res.append(_corrupt_commutator(model, spec, f1, f2, x))
        return max(res), {"pairs": [[a.sigma, b.sigma] for a, b in pairs]}
    if name == "lattice":
        grid = maps.lattice_evolve(model, spec, f1, f2, x, cfg.grid, cfg.grid)
        u = maps.extract_u(grid, f1, f2)
        return maps.lattice_residual(model, u, f1.beta, f2.beta)["max"], {"grid": cfg.grid}
    if name == "curve_invariance":
        return curve_invariance(model, spec, f1, x), {}
    if name == "determinant":
        lams = _probe_lambdas(rng, model, spec, 20)
        params = maps.apply_map(model, spec, f1, x)[1]
        return max(determinant_residual(model, f1.beta, params, l) for l in lams), {}
    if name == "dubrovin":
        lam = complex(2.0 + 2.0 * np.max(np.abs(spec.alpha)))
        return spectral.dubrovin_residual(model, spec, x, lam), {"lambda": [lam.real, lam.imag]}
    if name == "z_evolution":
        r1, r2 = hamiltonian.z_evolution_richardson(spec, f1.beta, 1, x)
        return r1, {"h": [1e-4, 5e-5], "residuals": [r1, r2]}
    if name == "flow_drift":
        res = hamiltonian.flow(model, spec, x, 1.0, 1e-10)
        return float(res.drift.max()), {"nfev": res.nfev}
    if name == "flow_map":
        return hamiltonian.flow_map_commutator(model, spec, f1, x, 0.1), {}
    if name == "rmatrix":
        lams = _probe_lambdas(rng, model, spec, 2)
        return rmatrix_residual(model, spec, x, lams[0], lams[1]), {}
    if name == "jacobi":
        scan = riemann.jacobi_linearity_residual(model, spec, f1, x, 10)
        return float(scan.residuals.max()), {"config": scan.config.label()}
    raise ValueError(f"unknown check {name!r}")


def _corrupt_commutator(model, spec, f1, f2, x):
    step1 = continued_map(model, spec, f1, x, True)
    a = maps.apply_map(model, spec, f2, step1(x))[0]
    b = step1(maps.apply_map(model, spec, f2, x)[0])
    return a.distance(b) / (1.0 + x.norm())


def _degenerate(sample) -> bool:
    try:
        return spectral.spectral_curve(sample.model, sample.spec, sample.x).degenerate
    except (ArithmeticError, ValueError):
        return True


def run_suite(cfg: SuiteConfig, sample: sampling.Sample | None = None) -> SuiteReport:
    """Run the configured checks on one admissible configuration.

    Failures of individual checks (including numerical exceptions) are
    recorded as failed entries; configuration errors raise.
    """
    model = Model.parse(cfg.model)
    names = CHECKS if cfg.checks is None else tuple(cfg.checks)
    unknown = set(names) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    tol = dict(TOLERANCES)
    tol.update(cfg.tolerances)
    if not names:
        return SuiteReport([], {})
    if sample is None:
        sample = sampling.random_admissible(model, cfg.N, cfg.seed)
    fingerprint = dict(sample.fingerprint(), sigmas=list(cfg.sigmas),
                       corrupt_map=bool(cfg.corrupt_map))
    results, skipped = [], []
    for name in sorted(names):
        if name in _ONLY and not _ONLY[name](model, sample.spec.N):
            skipped.append(name)
            continue
        if name == "jacobi" and _degenerate(sample):
            skipped.append(name)
            continue
        # a per-check generator keeps results independent of the check subset
        rng = np.random.default_rng([cfg.seed, CHECKS.index(name)])
        try:
            res, detail = _run_check(name, cfg, sample, rng)
        except (ArithmeticError, StepFailure, DegenerateCurveError, ValueError) as exc:
            res, detail = float("inf"), {"error": f"{type(exc).__name__}: {exc}"}
        res = float(res)
        results.append(CheckResult(name, res, float(tol[name]), bool(res <= tol[name]), detail))
    return SuiteReport(results, fingerprint, skipped)
