import numpy as np
import pytest

from kdvmaps import hamiltonian, models, sampling
from kdvmaps.errors import SingularityError
from kdvmaps.maps import FlowConfig
from kdvmaps.models import PhasePoint, Spectrum

MODELS = ("lpkdv", "lpmkdv", "lskdv")


@pytest.mark.parametrize("model", MODELS)
def test_closed_form_rhs_matches_hamiltonian_gradient(model):
    s = sampling.random_admissible(model, 3, 2)
    dp, dq = hamiltonian.canonical_rhs(model, s.spec, s.x)
    gp, gq = hamiltonian.h1_gradient_fd(model, s.spec, s.x)
    assert np.max(np.abs(dp + gq)) < 1e-7
    assert np.max(np.abs(dq - gp)) < 1e-7


@pytest.mark.parametrize("model", MODELS)
def test_flow_keeps_integrals(model):
    s = sampling.random_admissible(model, 2, 0)
    res = hamiltonian.flow(model, s.spec, s.x, 1.0, 1e-10)
    assert res.accurate
    assert res.drift.max() < 1e-8
    assert res.nsteps > 0


def test_zero_time_flow_is_identity():
    s = sampling.random_admissible("lskdv", 2, 0)
    res = hamiltonian.flow("lskdv", s.spec, s.x, 0.0)
    assert res.state is s.x and res.nfev == 0


def test_singular_potential_raises():
    spec = Spectrum([2.0])
    with pytest.raises(SingularityError):
        hamiltonian.canonical_rhs("lpkdv", spec, PhasePoint([1.0], [0.0]))


def test_fixed_point_commutes_with_flow():
    spec, x = Spectrum([2.0]), PhasePoint([1.0], [1.0])
    assert hamiltonian.flow_map_commutator("lpkdv", spec, FlowConfig(-1.0, -1), x, 0.1) < 1e-6


@pytest.mark.parametrize("model", MODELS)
def test_flow_commutes_with_map(model):
    s = sampling.random_admissible(model, 2, 1)
    assert hamiltonian.flow_map_commutator(model, s.spec, FlowConfig(s.betas[0]), s.x, 0.1) < 1e-6


def test_z_evolution_is_second_order():
    s = sampling.random_admissible("lpkdv", 2, 0)
    r1, r2 = hamiltonian.z_evolution_richardson(s.spec, s.betas[0], 1, s.x, h=1e-3)
    assert r1 < 1e-6
    assert 3.5 < r1 / r2 < 4.5


def test_lpmkdv_unit_hamiltonian_matches_integral():
    spec, x = Spectrum([2.0]), PhasePoint([1.0], [1.0])
    assert models.hamiltonian_h1("lpmkdv", spec, x) == 0.0
    assert models.hamiltonian_h1("lskdv", spec, PhasePoint([0.0], [0.0])) == 0.0
