import json

import numpy as np
import pytest

from kdvmaps import models, sampling, verify
from kdvmaps.maps import FlowConfig
from kdvmaps.models import PhasePoint


def test_canonical_bracket_of_coordinates():
    x = PhasePoint([0.3, -1.2], [0.7, 2.0])
    assert abs(verify.poisson_bracket(lambda y: y.p[0], lambda y: y.q[0], x) - 1) < 1e-9
    assert abs(verify.poisson_bracket(lambda y: y.p[0], lambda y: y.q[1], x)) < 1e-9


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_bracket_of_function_with_itself_vanishes(model):
    s = sampling.random_admissible(model, 2, 0)

    def F(y):
        return models.generating_function(model, s.spec, y, 7.0)

    assert abs(verify.poisson_bracket(F, F, s.x)) < 1e-8


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_integrals_in_involution(model):
    s = sampling.random_admissible(model, 3, 1)
    assert verify.involution_residual(model, s.spec, s.x) < 1e-6


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_map_is_symplectic_and_corruption_is_detected(model):
    s = sampling.random_admissible(model, 2, 3)
    f = FlowConfig(s.betas[0])
    assert verify.symplecticity_residual(model, s.spec, f, s.x) < 1e-6
    assert verify.symplecticity_residual(model, s.spec, f, s.x, corrupt=True) > 1e-4


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_rmatrix_identity(model):
    s = sampling.random_admissible(model, 2, 2)
    assert verify.rmatrix_residual(model, s.spec, s.x, 2.5 + 1j, -1.5 + 0.5j) < 1e-5


def test_rmatrix_rejects_equal_parameters():
    s = sampling.random_admissible("lpmkdv", 2, 2)
    with pytest.raises(ValueError):
        verify.rmatrix_residual("lpmkdv", s.spec, s.x, 2.0, -2.0)


@pytest.mark.parametrize("model", ["lpkdv", "lpmkdv", "lskdv"])
def test_discrete_lax_equation(model):
    s = sampling.random_admissible(model, 3, 4)
    lams = np.array([3.0 + 1j, -2.0, 0.5j, 7.0])
    f = FlowConfig(s.betas[0])
    assert verify.lax_residual(model, s.spec, f, s.x, lams) < 1e-11
    assert verify.lax_residual(model, s.spec, f, s.x, lams, corrupt=True) > 1e-6


def test_determinant_identity():
    p = models.DarbouxParams(a=1.3 - 0.2j, b=0.4 + 1j)
    assert verify.determinant_residual("lpkdv", -0.7, p, 2.0 + 1j) < 1e-15
    p = models.DarbouxParams.lskdv(0.8 + 0.6j, 0.3)
    assert verify.determinant_residual("lskdv", 0.3, p, 1.1 - 2j) < 1e-14


def test_suite_passes_and_is_deterministic():
    cfg = verify.SuiteConfig(model="lpkdv", N=1, seed=3)
    a, b = verify.run_suite(cfg), verify.run_suite(cfg)
    assert a.passed
    assert a.to_json() == b.to_json()
    names = [c["name"] for c in json.loads(a.to_json())["checks"]]
    assert names == sorted(names)


def test_suite_subset_matches_full_run():
    full = verify.run_suite(verify.SuiteConfig(model="lskdv", N=2, seed=5))
    part = verify.run_suite(verify.SuiteConfig(model="lskdv", N=2, seed=5, checks=("lax", "rmatrix")))
    by_name = {c.name: c.residual for c in full.checks}
    assert all(by_name[c.name] == c.residual for c in part.checks)


def test_empty_suite():
    report = verify.run_suite(verify.SuiteConfig(checks=()))
    assert report.checks == [] and report.passed


def test_unknown_check_rejected():
    with pytest.raises(ValueError):
        verify.run_suite(verify.SuiteConfig(checks=("nope",)))


def test_inapplicable_checks_are_skipped():
    report = verify.run_suite(verify.SuiteConfig(model="lpmkdv", N=3, seed=0))
    assert {"dubrovin", "z_evolution", "jacobi"} <= set(report.skipped)


def test_corrupted_map_fails_the_suite():
    report = verify.run_suite(verify.SuiteConfig(model="lpmkdv", N=2, seed=1, corrupt_map=True))
    assert not report.passed
    assert {"commutativity", "conservation", "lax", "symplecticity"} <= set(report.failing())


def test_tolerance_override():
    report = verify.run_suite(verify.SuiteConfig(model="lpkdv", N=2, seed=0, checks=("lax",),
                                                 tolerances={"lax": 0.0}))
    assert report.checks[0].tolerance == 0.0
