import numpy as np
import pytest

from kdvmaps import maps, sampling, spectral
from kdvmaps.maps import FlowConfig
from kdvmaps.models import PhasePoint, Spectrum

UNIT = (Spectrum([2.0]), PhasePoint([1.0], [1.0]))


def test_unit_point_curves_are_degenerate():
    c = spectral.spectral_curve("lpkdv", *UNIT)
    assert np.allclose(c.R, [-2, 5, -4, 1])
    assert c.degenerate and c.genus == 1 and c.sign == -1
    c = spectral.spectral_curve("lpmkdv", *UNIT)
    assert np.allclose(c.R, [16, -8, 1])
    assert c.degenerate and c.genus == 0


def test_unit_point_elliptic_variable():
    ev = spectral.elliptic_variables("lpkdv", *UNIT)
    assert np.allclose(ev.nu, [1.0])
    assert ev.mu is None


def test_genus_by_model():
    assert spectral.genus("lpkdv", 3) == 3
    assert spectral.genus("lpmkdv", 3) == 2
    assert spectral.genus("lskdv", 3) == 3


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_lifted_variables_lie_on_curve(model, N):
    s = sampling.random_admissible(model, N, 3)
    c = spectral.spectral_curve(model, s.spec, s.x)
    assert not c.degenerate
    e = c.branch_points
    scale = np.polynomial.polynomial.polyval(np.abs(e), np.abs(c.R))
    assert np.all(np.abs(np.polynomial.polynomial.polyval(e, c.R)) <= 1e-12 * scale)
    ev = spectral.elliptic_variables(model, s.spec, s.x)
    assert spectral.membership_residual(c, ev.nu, ev.xi_nu) < 1e-10
    if ev.mu is not None:
        assert spectral.membership_residual(c, ev.mu, ev.xi_mu) < 1e-10


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_curve_is_invariant_under_map(model):
    s = sampling.random_admissible(model, 2, 6)
    R0 = spectral.spectral_curve(model, s.spec, s.x).R
    y, _ = maps.apply_map(model, s.spec, FlowConfig(s.betas[0]), s.x)
    R1 = spectral.spectral_curve(model, s.spec, y).R
    assert np.max(np.abs(R1 - R0)) < 1e-10 * (1 + np.max(np.abs(R0)))


def test_branch_points_sorted():
    s = sampling.random_admissible("lskdv", 3, 1)
    e = spectral.spectral_curve("lskdv", s.spec, s.x).branch_points
    keys = list(zip(e.real, e.imag))
    assert keys == sorted(keys)


@pytest.mark.parametrize("model", ["lpkdv", "lskdv"])
def test_dubrovin_equations(model):
    s = sampling.random_admissible(model, 1, 0)
    lam = 2.0 + 2.0 * float(np.max(np.abs(s.spec.alpha)))
    assert spectral.dubrovin_residual(model, s.spec, s.x, lam) < 1e-5


def test_dubrovin_unit_point_probe():
    # the Dubrovin rate formula itself is exact; only the finite differences limit the residual
    assert spectral.dubrovin_residual("lpkdv", *UNIT, 5.0) < 1e-5


def test_dubrovin_not_available_for_lpmkdv():
    s = sampling.random_admissible("lpmkdv", 2, 0)
    with pytest.raises(ValueError):
        spectral.dubrovin_rates("lpmkdv", s.spec, s.x, 3.0)
