"""Lax, Darboux and continuous spectral matrices of the three lattice models.

Every model is described by a diagonal matrix A = diag(alpha) and a phase
point (p, q) in C^N x C^N. The Lax matrices are rational in the spectral
parameter, with simple poles at lambda = alpha_j (lattice potential KdV) or
lambda^2 = alpha_j^2 (lattice potential modified KdV and lattice
Schwarzian KdV). The generating function F is det L and its expansion
coefficients are the conserved integrals of both the continuous flows and
the symplectic maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import algebra
from .algebra import csqrt, is_degenerate
from .errors import BranchCollisionError, DegenerateInputError, FitError, PoleError


class Model(str, Enum):
    LPKDV = "lpkdv"
    LPMKDV = "lpmkdv"
    LSKDV = "lskdv"

    @classmethod
    def parse(cls, name: "str | Model") -> "Model":
        if name.__class__ is cls:
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown model {name!r}")

    @property
    def squared(self) -> bool:
        """True when the Lax matrix depends on the spectral parameter through zeta = lambda^2."""
        return self is not Model.LPKDV


@dataclass(frozen=True)
class Spectrum:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.alpha, dtype=complex)).copy()
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    @property
    def N(self) -> int:
        return int(self.alpha.size)

    def validate(self, model: Model) -> "Spectrum":
        model = Model.parse(model)
        a = self.alpha
        if a.size == 0 or not np.all(np.isfinite(a)):
            raise DegenerateInputError("spectrum must be a nonempty finite list")
        keys = a if model is Model.LPKDV else a * a
        if model is not Model.LPKDV and np.any(np.abs(a) <= 1e-12):
            raise DegenerateInputError("alpha_j must be nonzero for this model")
        diff = np.abs(keys[:, None] - keys[None, :]) + np.eye(a.size)
        if np.any(diff <= 1e-12 * (1 + np.abs(keys).max())):
            raise DegenerateInputError("spectrum entries must be pairwise distinct")
        return self


@dataclass(frozen=True)
class PhasePoint:
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=complex)).copy()
        q = np.atleast_1d(np.asarray(self.q, dtype=complex)).copy()
        if p.shape != q.shape or p.ndim != 1:
            raise ValueError("p and q must be 1-D arrays of equal length")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def N(self) -> int:
        return int(self.p.size)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.p, self.p).real + np.vdot(self.q, self.q).real))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.p)) and np.all(np.isfinite(self.q)))

    def to_real(self) -> np.ndarray:
        """Real coordinates (Re p, Re q, Im p, Im q), length 4N."""
        return np.concatenate([self.p.real, self.q.real, self.p.imag, self.q.imag])

    @classmethod
    def from_real(cls, v) -> "PhasePoint":
        v = np.asarray(v, dtype=float)
        n = v.size // 4
        return cls(v[:n] + 1j * v[2 * n:3 * n], v[n:2 * n] + 1j * v[3 * n:])

    def to_complex(self) -> np.ndarray:
        return np.concatenate([self.p, self.q])

    @classmethod
    def from_complex(cls, v) -> "PhasePoint":
        v = np.asarray(v, dtype=complex)
        n = v.size // 2
        return cls(v[:n], v[n:])

    def distance(self, other: "PhasePoint") -> float:
        return float(np.sqrt(np.sum(np.abs(self.p - other.p) ** 2 + np.abs(self.q - other.q) ** 2)))


@dataclass(frozen=True)
class DarbouxParams:
    """Discrete potentials of one lattice step.

    lpKdV uses (a, b); lpmKdV uses a; lSKdV uses a with s = beta / (a - 1/a)
    derived from it (never set independently).
    """

    a: complex
    b: complex | None = None
    s: complex | None = None

    @classmethod
    def lskdv(cls, a: complex, beta: complex) -> "DarbouxParams":
        a = complex(a)
        return cls(a=a, s=complex(beta) / (a - 1.0 / a))


def inner(x, y) -> complex:
    """Bilinear (not Hermitian) pairing sum_j x_j y_j."""
    return complex(np.dot(x, y))


def spectral_variable(model: Model, lam):
    """lambda for lpKdV, zeta = lambda^2 otherwise."""
    model = Model.parse(model)
    lam = np.asarray(lam, dtype=complex)
    return lam if model is Model.LPKDV else lam * lam


def alpha_poly(model: Model, spec: Spectrum) -> np.ndarray:
    """alpha(.) = prod(. - alpha_j) or prod(. - alpha_j^2), lowest-first coefficients."""
    model = Model.parse(model)
    key = (model, spec.alpha.tobytes())
    if key not in _ALPHA_CACHE:
        if len(_ALPHA_CACHE) > 256:
            _ALPHA_CACHE.clear()
        a = spec.alpha if model is Model.LPKDV else spec.alpha ** 2
        _ALPHA_CACHE[key] = algebra.poly_from_roots(a)
    return _ALPHA_CACHE[key].copy()


_ALPHA_CACHE: dict = {}


def alpha_at(model: Model, spec: Spectrum, var) -> complex:
    """alpha(var) evaluated as a product."""
    keys = spec.alpha if model is Model.LPKDV else spec.alpha ** 2
    return complex(np.prod(complex(var) - keys))


def _denominators(model: Model, alpha: np.ndarray, lam: np.ndarray) -> np.ndarray:
    var = spectral_variable(model, lam)
    keys = alpha if model is Model.LPKDV else alpha * alpha
    d = var[..., None] - keys
    scale = 1e-12 * (1.0 + np.abs(keys))
    if np.any(np.abs(d) <= scale):
        raise PoleError("spectral parameter on the spectrum")
    return d


def _sqrt_qq(q: np.ndarray) -> complex:
    qq = complex(np.dot(q, q))
    if is_degenerate(qq):
        raise DegenerateInputError("<q,q> = 0: square-root potential undefined")
    return csqrt(qq)


def lax_entries(model: Model, spec: Spectrum, x: PhasePoint, lam):
    """(L11, L12, L21) of the Lax matrix, vectorized over ``lam`` (L22 = -L11)."""
    model = Model.parse(model)
    if np.ndim(lam) == 0:
        return _scalar_entries(model, spec, x, complex(lam))
    lam = np.asarray(lam, dtype=complex)
    a, p, q = spec.alpha, x.p, x.q
    d = _denominators(model, a, lam)
    if model is Model.LPKDV:
        v = _sqrt_qq(q)
        L11 = v + np.sum(p * q / d, axis=-1)
        L12 = -lam - np.sum(p * p / d, axis=-1)
        L21 = 1.0 + np.sum(q * q / d, axis=-1)
    elif model is Model.LPMKDV:
        L11 = 0.5 + np.sum(a * a * p * q / d, axis=-1)
        L12 = -lam * np.sum(a * p * p / d, axis=-1)
        L21 = lam * np.sum(a * q * q / d, axis=-1)
    else:
        L11 = lam * (0.5 + np.sum(p * q / d, axis=-1))
        L12 = -inner(p, q) - np.sum(a * p * p / d, axis=-1)
        L21 = 1.0 + np.sum(a * q * q / d, axis=-1)
    return L11, L12, L21


def _scalar_entries(model: Model, spec: Spectrum, x: PhasePoint, lam: complex):
    # same formulas as lax_entries with dot products in place of reductions
    a, p, q = spec.alpha, x.p, x.q
    keys = a if model is Model.LPKDV else a * a
    d = (lam if model is Model.LPKDV else lam * lam) - keys
    if (np.abs(d) <= 1e-12 * (1.0 + np.abs(keys))).any():
        raise PoleError("spectral parameter on the spectrum")
    r = 1.0 / d
    if model is Model.LPKDV:
        return (_sqrt_qq(q) + complex(np.dot(p * q, r)), -lam - complex(np.dot(p * p, r)),
                1.0 + complex(np.dot(q * q, r)))
    if model is Model.LPMKDV:
        return (0.5 + complex(np.dot(a * a * p * q, r)), -lam * complex(np.dot(a * p * p, r)),
                lam * complex(np.dot(a * q * q, r)))
    return (lam * (0.5 + complex(np.dot(p * q, r))),
            -complex(np.dot(p, q)) - complex(np.dot(a * p * p, r)),
            1.0 + complex(np.dot(a * q * q, r)))


def lax_matrix(model, spec: Spectrum, x: PhasePoint, lam: complex) -> np.ndarray:
    L11, L12, L21 = lax_entries(model, spec, x, complex(lam))
    return algebra.mat2(L11, L12, L21, -L11)


def generating_function(model, spec: Spectrum, x: PhasePoint, lam):
    """F = det L = -L11^2 - L12 L21; accepts scalar or array ``lam``."""
    L11, L12, L21 = lax_entries(model, spec, x, lam)
    F = -L11 * L11 - L12 * L21
    return complex(F) if np.ndim(F) == 0 else F


def darboux_matrix(model, beta: complex, params: DarbouxParams, lam: complex) -> np.ndarray:
    model = Model.parse(model)
    lam, beta, a = complex(lam), complex(beta), complex(params.a)
    if model is Model.LPKDV:
        b = complex(params.b)
        return algebra.mat2(a, -lam + beta + a * b, 1.0, b)
    if model is Model.LPMKDV:
        return algebra.mat2(lam * a, beta, beta, lam / a)
    c = a - 1.0 / a
    return algebra.mat2(lam * a, beta * beta / c, c, lam / a)


def continuous_matrix(model, spec: Spectrum, x: PhasePoint, lam: complex) -> np.ndarray:
    """Spectral matrix of the continuous problem with squared-eigenfunction potentials."""
    model = Model.parse(model)
    lam = complex(lam)
    a, p, q = spec.alpha, x.p, x.q
    if model is Model.LPKDV:
        v = _sqrt_qq(q)
        w = inner(p, q) / v
        return algebra.mat2(v, -lam + w, 1.0, -v)
    if model is Model.LPMKDV:
        v = -inner(a * p, p)
        w = inner(a * q, q)
        return algebra.mat2(lam * lam / 2, lam * v, lam * w, -lam * lam / 2)
    v = inner(p, q)
    w = inner(a * q, q) / 2
    d = -lam * lam / 2 + v + w
    return algebra.mat2(d, lam * v, -lam, -d)


# ------------------------------------------------------------------ integrals

RADICAND_SNAP = 1e-12

_LEADING = {Model.LPKDV: 1.0, Model.LPMKDV: -0.25, Model.LSKDV: -0.25}


def _numerator_degree(model: Model, n: int) -> int:
    return n if model is Model.LPMKDV else n + 1


def _fit_grid(model: Model, spec: Spectrum):
    """Sample circle, alpha values and least-squares operator; cached per spectrum."""
    key = (model, spec.alpha.tobytes())
    if key in _GRID_CACHE:
        return _GRID_CACHE[key]
    if len(_GRID_CACHE) > 256:
        _GRID_CACHE.clear()
    n = spec.N
    deg = _numerator_degree(model, n)
    K = max(2 * n + 2, 12, deg + 2)
    keys = spec.alpha if model is Model.LPKDV else spec.alpha ** 2
    r = 2.0 + 2.0 * float(np.max(np.abs(keys)))
    var = r * np.exp(2j * np.pi * (np.arange(K) + 0.5) / K)
    lam = var if model is Model.LPKDV else csqrt(var)
    alv = algebra.poly_eval(alpha_poly(model, spec), var)
    # samples sit on a circle, so the rescaled Vandermonde matrix is well conditioned
    V = np.vander(var / r, deg + 1, increasing=True)
    R = 1.0 / _denominators(model, spec.alpha, lam)
    grid = (lam, alv, V, np.linalg.pinv(V), r ** -np.arange(deg + 1.0), R)
    _GRID_CACHE[key] = grid
    return grid


_GRID_CACHE: dict = {}


def _grid_generating(model: Model, spec: Spectrum, x: PhasePoint, lam, R) -> np.ndarray:
    # lax_entries with the reciprocal denominators R[k, j] = 1 / (var_k - key_j) precomputed
    a, p, q = spec.alpha, x.p, x.q
    if model is Model.LPKDV:
        L11 = _sqrt_qq(q) + R @ (p * q)
        L12 = -lam - R @ (p * p)
        L21 = 1.0 + R @ (q * q)
    elif model is Model.LPMKDV:
        L11 = 0.5 + R @ (a * a * p * q)
        L12 = -lam * (R @ (a * p * p))
        L21 = lam * (R @ (a * q * q))
    else:
        L11 = lam * (0.5 + R @ (p * q))
        L12 = -inner(p, q) - R @ (a * p * p)
        L21 = 1.0 + R @ (a * q * q)
    return -L11 * L11 - L12 * L21


def generating_numerator(model, spec: Spectrum, x: PhasePoint) -> np.ndarray:
    """Polynomial F * alpha in the spectral variable (lambda or zeta), by sampling.

    F is sampled on a circle enclosing the spectrum and the known rational
    form (simple poles at the spectrum, fixed leading term) is fitted by
    least squares. A poor fit means F does not have that form and raises.
    """
    model = Model.parse(model)
    lam, alv, V, pinv, unscale, R = _fit_grid(model, spec)
    vals = _grid_generating(model, spec, x, lam, R) * alv
    d = pinv @ vals
    resid = float(np.max(np.abs(V @ d - vals)) / (1.0 + np.max(np.abs(vals))))
    coeffs = d * unscale
    if resid > 1e-8 or abs(coeffs[-1] - _LEADING[model]) > 1e-8 * (1 + abs(coeffs).max()):
        raise FitError(f"generating function does not fit its rational form (residual {resid:.2e})")
    coeffs[-1] = _LEADING[model]
    return coeffs


def integrals(model, spec: Spectrum, x: PhasePoint) -> np.ndarray:
    """The N conserved quantities read off the expansion of F.

    lpKdV and lSKdV: F_1..F_N, the coefficients of lambda^-j (zeta^-j) at
    infinity. lpmKdV: F_0 = F at zeta = 0 followed by F_1..F_{N-1}, the
    coefficients of zeta^-j at infinity.
    """
    model = Model.parse(model)
    n = spec.N
    num = generating_numerator(model, spec, x)
    den = alpha_poly(model, spec)
    if model is Model.LPMKDV:
        _, e = algebra.laurent_at_infinity(num, den, n)
        f0 = num[0] / den[0]
        return np.concatenate([[f0], e[1:n]])
    _, e = algebra.laurent_at_infinity(num, den, n + 2)
    return e[2:n + 2].copy()


def hamiltonian_h1(model, spec: Spectrum, x: PhasePoint) -> complex:
    """Hamiltonian of the continuous canonical system (closed form)."""
    model = Model.parse(model)
    a, p, q = spec.alpha, x.p, x.q
    if model is Model.LPKDV:
        v = _sqrt_qq(q)
        return 0.5 * (inner(a * q, q) + inner(p, p)) - v * inner(p, q)
    pq = inner(p, q)
    if model is Model.LPMKDV:
        return 0.5 * (inner(a * p, p) * inner(a * q, q) - inner(a * a * p, q))
    f1 = -pq * pq - inner(a * a * p, q) + inner(a * p, p) + pq * inner(a * q, q)
    return -0.5 * f1


# --------------------------------------------------------- discrete potentials

def normalization(model, spec: Spectrum, beta: complex) -> np.ndarray:
    """Per-component factors (alpha_j - beta)^(-1/2) or (alpha_j^2 - beta^2)^(-1/2), principal branch."""
    model = Model.parse(model)
    beta = complex(beta)
    key = (model, beta, spec.alpha.tobytes())
    if key in _NORM_CACHE:
        return _NORM_CACHE[key]
    if len(_NORM_CACHE) > 256:
        _NORM_CACHE.clear()
    d = spec.alpha - beta if model is Model.LPKDV else spec.alpha ** 2 - beta * beta
    if np.any(np.abs(d) <= 1e-12 * (1 + np.abs(spec.alpha))):
        raise PoleError("beta on the spectrum")
    c = 1.0 / csqrt(d)
    c.flags.writeable = False
    _NORM_CACHE[key] = c
    return c


_NORM_CACHE: dict = {}


def curve_sqrt_at(model, spec: Spectrum, x: PhasePoint, beta: complex) -> complex:
    """Principal square root of the curve polynomial at the lattice parameter.

    sqrt(-R(beta)) for lpKdV, sqrt(R(beta^2)) otherwise; R is evaluated
    directly from F so no fitted data enters the map.
    """
    model = Model.parse(model)
    beta = complex(beta)
    F = generating_function(model, spec, x, beta)
    return _radicand_root(model, beta, F, alpha_at(model, spec, spectral_variable(model, beta)))


def _radicand_root(model: Model, beta: complex, F: complex, al: complex) -> complex:
    if model is Model.LPKDV:
        rad = -F * al * al
    elif model is Model.LPMKDV:
        rad = -4.0 * F * al * al
    else:
        rad = -4.0 * beta * beta * al * al * F
    # real data puts the radicand on the cut; roundoff must not flip the sheet
    if abs(rad.imag) <= RADICAND_SNAP * abs(rad):
        rad = complex(rad.real, 0.0)
    return csqrt(rad)


def constraint_quadratic(model, spec: Spectrum, beta: complex, x: PhasePoint) -> np.ndarray:
    """Coefficients (lowest first) of the quadratic fixing the discrete potential.

    lpKdV: in b, L21 b^2 + 2 L11 b - L12 at lambda = beta.
    lpmKdV: in a, a^2 L12 - 2 a L11 - L21.
    lSKdV: in X = a^2 - 1, X^2 L12 - 2 beta X L11 - beta^2 L21.
    """
    model = Model.parse(model)
    beta = complex(beta)
    L11, L12, L21 = (complex(v) for v in lax_entries(model, spec, x, beta))
    if model is Model.LPKDV:
        return np.array([-L12, 2 * L11, L21])
    if model is Model.LPMKDV:
        return np.array([-L21, -2 * L11, L12])
    return np.array([-beta * beta * L21, -2 * beta * L11, L12])


def potential_constraint(model, spec: Spectrum, beta: complex, sigma: int, x: PhasePoint,
                         *, a_sign: int = 1) -> DarbouxParams:
    """Discrete potentials of the step S_beta at x, for the branch ``sigma``.

    ``a_sign`` selects a or -a for lSKdV (ignored otherwise).
    """
    model = Model.parse(model)
    beta = complex(beta)
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    if model.squared and is_degenerate(beta, 1.0):
        raise DegenerateInputError("beta must be nonzero")
    L11, L12, L21 = (complex(v) for v in lax_entries(model, spec, x, beta))
    al = alpha_at(model, spec, spectral_variable(model, beta))
    root = _radicand_root(model, beta, -L11 * L11 - L12 * L21, al)

    if model is Model.LPKDV:
        disc = root / al
        if is_degenerate(disc, L11):
            raise BranchCollisionError("sqrt(-R(beta)) vanishes: beta is a branch point")
        if is_degenerate(L21, L11 + disc):
            raise DegenerateInputError("1 + Q_beta(q,q) vanishes")
        b = (-L11 + sigma * disc) / L21
        c = normalization(model, spec, beta)
        qt = c * (x.p + b * x.q)
        a = b + _sqrt_qq(x.q) + _sqrt_qq(qt)
        return DarbouxParams(a=a, b=b)

    disc = root / (2.0 * al)
    if model is Model.LPMKDV:
        if is_degenerate(disc, L11):
            raise BranchCollisionError("sqrt(R(beta^2)) vanishes: beta^2 is a branch point")
        if is_degenerate(L12, L11 + disc):
            raise DegenerateInputError("Q_beta(Ap,p) vanishes")
        a = (L11 + sigma * disc) / L12
        if is_degenerate(a, 1.0):
            raise DegenerateInputError("a = 0")
        return DarbouxParams(a=a)

    den = -L12  # <p,q> + Q_beta(Ap,p)
    num = beta * L11 + sigma * disc  # beta^2 (1/2 + Q_beta(p,q)) +- sqrt(R)/(2 alpha)
    if is_degenerate(disc, beta * L11):
        raise BranchCollisionError("sqrt(R(beta^2)) vanishes: beta^2 is a branch point")
    if is_degenerate(den, num):
        raise DegenerateInputError("<p,q> + Q_beta(Ap,p) vanishes")
    X = -num / den
    a2 = 1.0 + X
    if is_degenerate(a2, 1.0) or is_degenerate(X, 1.0):
        raise DegenerateInputError("a^2 in {0, 1}")
    a = (1 if a_sign >= 0 else -1) * csqrt(a2)
    return DarbouxParams.lskdv(a, beta)
