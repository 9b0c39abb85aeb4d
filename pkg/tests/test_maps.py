import numpy as np
import pytest

from kdvmaps import maps, models, sampling
from kdvmaps.errors import StepFailure
from kdvmaps.maps import FlowConfig
from kdvmaps.models import PhasePoint, Spectrum

UNIT = (Spectrum([2.0]), PhasePoint([1.0], [1.0]))
SQ3 = np.sqrt(3.0)


def test_flow_config_validates_signs():
    with pytest.raises(ValueError):
        FlowConfig(1.0, 0)


def test_lpkdv_fixed_point_and_reflection():
    spec, x = UNIT
    y, _ = maps.apply_map("lpkdv", spec, FlowConfig(-1.0, -1), x)
    assert y.distance(x) < 1e-12
    y, _ = maps.apply_map("lpkdv", spec, FlowConfig(-1.0, 1), x)
    assert y.distance(PhasePoint([-1.0], [-1.0])) < 1e-12


def test_lpmkdv_unit_step():
    spec, x = UNIT
    y, p = maps.apply_map("lpmkdv", spec, FlowConfig(1.0, 1), x)
    assert abs(p.a + 2) < 1e-14
    assert y.distance(PhasePoint([-SQ3], [0.0])) < 1e-12
    assert abs(models.inner(y.p, y.q) + models.inner(x.p, x.q) - 1) < 1e-12


def test_orbit_lengths_and_constant_orbit():
    spec, x = UNIT
    assert len(maps.iterate_orbit("lpkdv", spec, FlowConfig(-1.0, -1), x, 0)) == 1
    orbit = maps.iterate_orbit("lpkdv", spec, FlowConfig(-1.0, -1), x, 5)
    assert len(orbit) == 6 and orbit[-1][1] is None
    assert max(y.distance(x) for y, _ in orbit) < 1e-12


def test_step_failure_carries_index():
    # after one step the lpmkdv unit orbit sits where a vanishes
    spec, x = UNIT
    with pytest.raises(StepFailure) as info:
        maps.iterate_orbit("lpmkdv", spec, FlowConfig(0.5, 1), x, 3)
    assert info.value.index == 1


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_orbit_conserves_integrals(model):
    s = sampling.random_admissible(model, 3, 7)
    orbit = maps.iterate_orbit(model, s.spec, FlowConfig(s.betas[0]), s.x, 50)
    I0 = models.integrals(model, s.spec, s.x)
    for y, _ in orbit:
        assert np.max(np.abs(models.integrals(model, s.spec, y) - I0) / (1 + np.abs(I0))) < 1e-9


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_grid_commutes_pointwise(model):
    s = sampling.random_admissible(model, 2, 4)
    f1, f2 = FlowConfig(s.betas[0]), FlowConfig(s.betas[1])
    grid = maps.lattice_evolve(model, s.spec, f1, f2, s.x, 8, 8)
    for m in range(8):
        for n in range(8):
            x = grid.states[m][n]
            assert maps.commutator_residual(model, s.spec, f1, f2, x) <= 1e-9


def test_identical_flows_give_symmetric_grid():
    s = sampling.random_admissible("lskdv", 2, 0)
    f = FlowConfig(s.betas[0])
    grid = maps.lattice_evolve("lskdv", s.spec, f, f, s.x, 1, 1)
    assert grid.states[1][0].distance(grid.states[0][1]) == 0.0


def test_fixed_point_u_field():
    spec, x = UNIT
    f = FlowConfig(-1.0, -1)
    grid = maps.lattice_evolve("lpkdv", spec, f, f, x, 3, 3)
    u = maps.extract_u(grid, f, f)
    m, n = np.meshgrid(range(4), range(4), indexing="ij")
    assert np.max(np.abs(u.u - (-SQ3) * (m + n))) < 1e-12
    assert maps.lattice_residual("lpkdv", u, -1.0, -1.0)["max"] < 1e-14


def test_lpkdv_edge_values_square_consistently():
    # z^2 = v_{m+1}^2 + v_m^2 - beta along every edge
    s = sampling.random_admissible("lpkdv", 2, 2)
    f1, f2 = FlowConfig(s.betas[0]), FlowConfig(s.betas[1])
    grid = maps.lattice_evolve("lpkdv", s.spec, f1, f2, s.x, 3, 3)
    u = maps.extract_u(grid, f1, f2)
    for m in range(3):
        for n in range(4):
            z = u.gauge["z_m"][m, n]
            q0, q1 = grid.states[m][n].q, grid.states[m + 1][n].q
            target = models.inner(q1, q1) + models.inner(q0, q0) - f1.beta
            assert abs(z * z - target) < 1e-10 * (1 + abs(target))
    assert u.path_residual < 1e-9


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_lattice_equation_on_random_grid(model):
    s = sampling.random_admissible(model, 3, 5)
    f1, f2 = FlowConfig(s.betas[0]), FlowConfig(s.betas[1])
    grid = maps.lattice_evolve(model, s.spec, f1, f2, s.x, 6, 6)
    u = maps.extract_u(grid, f1, f2)
    assert maps.lattice_residual(model, u, f1.beta, f2.beta)["max"] < 1e-8
    assert u.path_residual < 1e-9


def test_lattice_residual_of_constant_field():
    assert maps.lattice_residual("lpkdv", np.ones((3, 3)), 0.5, 0.5)["max"] == 0.0
    with pytest.raises(ValueError):
        maps.lattice_residual("lpkdv", np.ones((1, 3)), 0.5, 0.5)
