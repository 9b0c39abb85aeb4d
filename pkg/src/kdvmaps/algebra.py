"""Complex scalar, polynomial, 2x2 matrix and quadrature primitives.

Polynomials are 1-D complex arrays of coefficients, lowest degree first,
so they plug straight into :mod:`numpy.polynomial.polynomial`.
2x2 matrices are plain ``(2, 2)`` complex arrays.
"""

from __future__ import annotations

from typing import Callable

import cmath

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DegenerateInputError, QuadratureError

DEGENERATE_RTOL = 1e-12


def csqrt(z):
    """Principal square root with argument in (-pi/2, pi/2].

    A negative real input with a signed-zero imaginary part is mapped to
    the upper half plane, so ``csqrt(-4) == 2j`` regardless of the sign of
    the zero.
    """
    if isinstance(z, (complex, float, int)):
        return cmath.sqrt(complex(z) + 0j)
    z = np.asarray(z, dtype=complex) + 0j
    return complex(np.sqrt(z)) if z.ndim == 0 else np.sqrt(z)


def is_degenerate(den, num=0.0) -> bool:
    """Denominator test shared by every constraint: |den| <= 1e-12 (1 + |num|)."""
    return bool(abs(den) <= DEGENERATE_RTOL * (1.0 + abs(num)))


# ---------------------------------------------------------------- polynomials

def trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=complex))
    nz = np.nonzero(c)[0]
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1].copy()


def poly_eval(coeffs, x):
    return P.polyval(x, np.asarray(coeffs, dtype=complex))


def poly_from_roots(roots) -> np.ndarray:
    return np.asarray(P.polyfromroots(np.asarray(roots, dtype=complex)), dtype=complex)


def poly_mul(a, b) -> np.ndarray:
    return np.asarray(P.polymul(a, b), dtype=complex)


def poly_roots(coeffs, polish: int = 3) -> np.ndarray:
    """All roots (with multiplicity) of a polynomial, lowest-first coefficients.

    Companion-matrix eigenvalues followed by a few Newton corrections on
    the original coefficients. A correction is kept only if it lowers the
    residual, so multiple roots do not wander.
    """
    c = trim(coeffs)
    if c.size == 1:
        if c[0] == 0:
            raise DegenerateInputError("zero polynomial has no well-defined roots")
        raise DegenerateInputError("constant polynomial has no roots")
    roots = np.asarray(P.polyroots(c), dtype=complex)
    dc = P.polyder(c)
    for _ in range(polish):
        f = P.polyval(roots, c)
        fp = P.polyval(roots, dc)
        ok = fp != 0
        step = np.zeros_like(roots)
        step[ok] = f[ok] / fp[ok]
        trial = roots - step
        better = np.abs(P.polyval(trial, c)) < np.abs(f)
        roots = np.where(better, trial, roots)
    return roots


def poly_fit(x, y, degree: int) -> tuple[np.ndarray, float]:
    """Least-squares polynomial through samples; returns (coeffs, relative residual).

    The abscissae are rescaled by their largest modulus before the solve so
    that samples on a circle give an (almost) orthogonal Vandermonde system.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    scale = float(np.max(np.abs(x))) or 1.0
    V = np.vander(x / scale, degree + 1, increasing=True)
    d, *_ = np.linalg.lstsq(V, y, rcond=None)
    resid = float(np.max(np.abs(V @ d - y)) / (1.0 + np.max(np.abs(y))))
    return d / scale ** np.arange(degree + 1), resid


def laurent_at_infinity(num, den, n_terms: int) -> tuple[int, np.ndarray]:
    """Expansion of num(x)/den(x) in powers of 1/x.

    Returns ``(top, e)`` with num/den = sum_k e[k] x^(top - k).
    """
    num = trim(num)
    den = trim(den)
    top = (num.size - 1) - (den.size - 1)
    a = num[::-1]  # power series in w = 1/x
    b = den[::-1]
    n = n_terms
    a = np.concatenate([a, np.zeros(max(0, n - a.size), dtype=complex)])[:n]
    e = np.zeros(n, dtype=complex)
    for k in range(n):
        acc = a[k]
        for i in range(1, min(k, b.size - 1) + 1):
            acc -= b[i] * e[k - i]
        e[k] = acc / b[0]
    return top, e


# ------------------------------------------------------------------ quadrature

_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def leggauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    if n not in _LEGGAUSS_CACHE:
        t, w = np.polynomial.legendre.leggauss(n)
        _LEGGAUSS_CACHE[n] = (0.5 * (t + 1.0), 0.5 * w)
    return _LEGGAUSS_CACHE[n]


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], n_nodes: int) -> complex:
    """Fixed-order Gauss-Legendre estimate of the integral of f over [0, 1].

    ``f`` receives the full node array and must return values of the same shape.
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be at least 2")
    t, w = leggauss01(n_nodes)
    vals = np.asarray(f(t), dtype=complex)
    bad = ~np.isfinite(vals)
    if bad.any():
        node = float(t[np.argmax(bad)])
        raise QuadratureError(f"non-finite integrand at t={node}", node)
    return complex(np.dot(w, vals))


def gauss_legendre_adaptive(f, n_start: int = 8, tol: float = 1e-12,
                            max_nodes: int = 4096) -> complex:
    """Double the node count until successive estimates differ by < tol."""
    n = n_start
    prev = gauss_legendre(f, n)
    while n < max_nodes:
        n *= 2
        cur = gauss_legendre(f, n)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise QuadratureError(f"no convergence with {max_nodes} nodes")


# ---------------------------------------------------------------- 2x2 matrices

def mat2(a11, a12, a21, a22) -> np.ndarray:
    return np.array([[a11, a12], [a21, a22]], dtype=complex)


def det2(A) -> complex:
    return complex(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])


def mat2_mul(A, B) -> np.ndarray:
    return np.asarray(A, dtype=complex) @ np.asarray(B, dtype=complex)


def mat2_sub(A, B) -> np.ndarray:
    return np.asarray(A, dtype=complex) - np.asarray(B, dtype=complex)


def max_norm(A) -> float:
    return float(np.max(np.abs(A)))


def commutator_norm(A, B) -> float:
    """Max-entry norm of AB - BA."""
    return max_norm(mat2_mul(A, B) - mat2_mul(B, A))
