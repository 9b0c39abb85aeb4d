"""Random admissible configurations for the three models.

A configuration is admissible when every map it will drive stays away from
the degeneracies of the potential constraints and the orbits stay bounded.
Plain uniform sampling of (p, q) gives unbounded orbits for lpKdV (the
zeros of L21 escape through infinity), so each model has its own recipe:

* lpKdV: real data built from a chosen real curve and a divisor with one
  elliptic variable in each bounded gap where -R >= 0, lattice parameters
  below the smallest branch point.
* lpmKdV: q = conj(p) with alpha real, beta in (0, min alpha) and
  Re R(beta^2) < 0.
* lSKdV: complex p, q with real and imaginary parts in [0.5, 1.5],
  beta in (0, min alpha).

Draws that fail the constraint checks are rejected, up to ``max_retries``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import models
from .errors import DegenerateInputError
from .models import Model, PhasePoint, Spectrum

log = logging.getLogger(__name__)

MAX_RETRIES = 100


class SamplingError(RuntimeError):
    """No admissible configuration within the retry budget."""


@dataclass(frozen=True)
class Sample:
    model: Model
    spec: Spectrum
    x: PhasePoint
    betas: tuple
    seed: int
    retries: int = 0

    def fingerprint(self) -> dict:
        return {
            "model": self.model.value,
            "N": self.spec.N,
            "alpha": [[float(a.real), float(a.imag)] for a in self.spec.alpha],
            "betas": [[float(b.real), float(b.imag)] for b in self.betas],
            "seed": int(self.seed),
        }


def _u(rng, n=None, lo=0.5, hi=1.5):
    return rng.uniform(lo, hi, n)


def lpkdv_from_divisor(alpha, roots, nu, signs, q_signs) -> PhasePoint:
    """Real lpKdV point with prescribed curve and elliptic variables.

    ``roots`` are the N+1 zeros of Lambda (their sum must equal sum(alpha)),
    ``nu`` the zeros of L21 and ``signs`` the sheets of the lifted points,
    so that alpha(nu_k) L11(nu_k) = signs_k sqrt(-R(nu_k)).
    """
    al = np.asarray(alpha, dtype=float)
    roots = np.asarray(roots, dtype=float)
    nu = np.asarray(nu, dtype=float)
    n = al.size
    dA = np.array([np.prod(al[j] - np.delete(al, j)) for j in range(n)])
    q2 = np.array([np.prod(al[j] - nu) for j in range(n)]) / dA
    if np.any(q2 <= 0):
        raise DegenerateInputError("divisor does not give real q")
    v = np.sqrt(q2.sum())
    minus_r = np.array([-np.prod(t - roots) * np.prod(t - al) for t in nu])
    if np.any(minus_r < 0):
        raise DegenerateInputError("elliptic variable outside the real ovals")
    c = np.asarray(signs) * np.sqrt(minus_r)

    def al11(t):
        s = v * np.prod(t - nu)
        for k in range(n):
            rest = np.delete(nu, k)
            s += c[k] * np.prod((t - rest) / (nu[k] - rest))
        return s

    q = np.sqrt(q2) * np.asarray(q_signs)
    p = np.array([al11(al[j]) / dA[j] for j in range(n)]) / q
    return PhasePoint(p, q)


def _draw_lpkdv(rng, n, n_beta):
    al = np.sort(_u(rng, n) + np.arange(n))
    spacing = np.diff(np.concatenate([[0.0], al]))
    d = _u(rng, n, 0.3, 0.9) * np.minimum(al[0] / (n + 1), spacing)
    r = al - d
    r0 = d.sum()
    roots = np.concatenate([[r0], r])
    nu = r + _u(rng, n, 0.1, 0.9) * d
    x = lpkdv_from_divisor(al, roots, nu, rng.choice([-1, 1], n), rng.choice([-1, 1], n))
    betas = tuple(complex(r0 - _u(rng, None, 0.1, 1.0)) for _ in range(n_beta))
    return Spectrum(al), x, betas


def _draw_lpmkdv(rng, n, n_beta):
    al = _u(rng, n) + np.arange(n)
    p = _u(rng, n) * np.exp(1j * rng.uniform(0, 2 * np.pi, n)) * _u(rng, None, 0.2, 1.0)
    spec, x = Spectrum(al), PhasePoint(p, p.conj())
    betas = tuple(complex(0.5 * _u(rng) * al.min()) for _ in range(n_beta))
    for b in betas:
        if (models.curve_sqrt_at(Model.LPMKDV, spec, x, b) ** 2).real >= 0:
            raise DegenerateInputError("lattice parameter outside the bounded regime")
    return spec, x, betas


def _draw_lskdv(rng, n, n_beta):
    al = _u(rng, n) + np.arange(n)
    p = _u(rng, n) + 1j * _u(rng, n) * rng.choice([-1, 1], n)
    q = _u(rng, n) + 1j * _u(rng, n) * rng.choice([-1, 1], n)
    betas = tuple(complex(0.5 * _u(rng) * al.min()) for _ in range(n_beta))
    return Spectrum(al), PhasePoint(p, q), betas


_DRAW = {Model.LPKDV: _draw_lpkdv, Model.LPMKDV: _draw_lpmkdv, Model.LSKDV: _draw_lskdv}


def _check(model, spec, x, betas):
    spec.validate(model)
    models.integrals(model, spec, x)
    if len(set(betas)) != len(betas):
        raise DegenerateInputError("lattice parameters coincide")
    for b in betas:
        for sigma in (1, -1):
            models.potential_constraint(model, spec, b, sigma, x)


def random_admissible(model, N: int, seed: int, n_beta: int = 2,
                      max_retries: int = MAX_RETRIES) -> Sample:
    """Deterministic admissible configuration for (model, N, seed)."""
    model = Model.parse(model)
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    for attempt in range(max_retries + 1):
        try:
            spec, x, betas = _DRAW[model](rng, N, n_beta)
            _check(model, spec, x, betas)
        except (DegenerateInputError, ArithmeticError) as exc:
            log.debug("seed %d retry %d rejected: %s", seed, attempt, exc)
            continue
        if attempt:
            log.info("seed %d accepted after %d rejections", seed, attempt)
        return Sample(model, spec, x, betas, seed, attempt)
    log.warning("seed %d skipped: no admissible draw in %d retries", seed, max_retries)
    raise SamplingError(f"no admissible {model.value} draw for seed {seed}")
