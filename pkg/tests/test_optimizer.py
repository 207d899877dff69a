import warnings
from fractions import Fraction

import numpy as np
import pytest

from kernelforge.kernelspace import KernelSpec, OverconstrainedError, general_solution, parse_spec
from kernelforge.optimizer import (CONVERGED_RESIDUAL, cubic_roots, find_critical_points,
                                   gradient_system, hessian_system, is_positive_definite,
                                   optimize_kernel, optimized)
from kernelforge.polyalg import CompiledPoly, MultiPoly
from kernelforge.staircase import eg_squared
from kernelforge.zoo import kernel_sup_distance

from reference_data import EXEMPLAR_CUBICS, OPTIMIZED_COEFFICIENTS


def _objective(label):
    return eg_squared(general_solution(parse_spec(label)).symbolic_kernel())


def _proportional(poly, var, coeffs):
    got = [c.constant_value() for c in poly.univariate_coeffs(var)]
    ratio = got[-1] / Fraction(coeffs[-1])
    return ratio > 0 and all(g == ratio * c for g, c in zip(got, coeffs))


@pytest.mark.parametrize("label", list(EXEMPLAR_CUBICS))
def test_gradient_cubics(label):
    obj = _objective(label)
    (g,) = gradient_system(obj)
    (var,) = obj.free_names
    assert _proportional(g, var, EXEMPLAR_CUBICS[label])


def test_gradient_of_constant_objective_errors():
    with pytest.raises(ValueError):
        gradient_system(eg_squared(optimized(parse_spec("K_2_2")).kernel))


def test_hessian_symmetric():
    obj = _objective("K_5_2_3")
    names = obj.free_names
    h = hessian_system(gradient_system(obj), names)
    assert h[0][1] == h[1][0]


def test_positive_definite_check():
    assert is_positive_definite(np.eye(2))
    assert not is_positive_definite(np.diag([1.0, -1.0]))
    assert not is_positive_definite(np.diag([1.0, 0.0]))


def test_k22_single_minimum_matches_cubic_root():
    obj = _objective("K_2_2")
    grad = gradient_system(obj)
    pts = find_critical_points(grad, objective=obj.poly)
    assert len(pts) == 1
    (p,) = pts
    assert p.hessian_pd and p.converged and p.residual < CONVERGED_RESIDUAL
    assert p.coords["c_0_1"] == pytest.approx(-0.621913, abs=5e-7)
    roots = cubic_roots(EXEMPLAR_CUBICS["K_2_2"])
    assert len(roots) == 1
    assert roots[0] == pytest.approx(p.coords["c_0_1"], abs=1e-9)


@pytest.mark.parametrize("label", ["K_2_4_S", "K_3_3_S"])
def test_one_variable_roots_cross_checked(label):
    obj = _objective(label)
    pts = find_critical_points(gradient_system(obj), objective=obj.poly)
    roots = cubic_roots(EXEMPLAR_CUBICS[label])
    found = sorted(p.coords[obj.free_names[0]] for p in pts)
    np.testing.assert_allclose(found, roots, atol=1e-8)


def test_k33s_minimum():
    res = optimized(parse_spec("K_3_3_S"))
    assert res.best.coords["c_0_2"] == pytest.approx(-2.067867, abs=5e-7)


def test_cubic_roots_known():
    np.testing.assert_allclose(cubic_roots([-6, 11, -6, 1]), [1, 2, 3])
    np.testing.assert_allclose(cubic_roots([1, 0, 1]), [])


@pytest.mark.parametrize("label", ["K_2_2", "K_5_2_3", "K_3_3_S"])
def test_optimum_coefficients(label):
    res = optimized(parse_spec(label))
    got = res.kernel.float_coeffs[:, 1:]
    np.testing.assert_allclose(got, OPTIMIZED_COEFFICIENTS[label], atol=5e-6)
    assert res.n_minima == 1


def test_minimum_beats_random_points():
    res = optimized(parse_spec("K_5_2_3"))
    names = res.solution.free_names
    f = CompiledPoly(res.objective.poly, names)
    rng = np.random.default_rng(7)
    pts = rng.uniform(-4, 4, size=(500, len(names)))
    best = f(np.array([[res.best.coords[n] for n in names]]))[0]
    assert best <= f(pts).min()


def test_unique_spec_returns_kernel_directly():
    res = optimize_kernel(KernelSpec(2, 3, True))
    assert res.best is None and res.solution.is_unique
    assert res.kernel.rational_coeffs()[0][2] == Fraction(-5, 2)


def test_overconstrained_spec_errors():
    with pytest.raises(OverconstrainedError):
        optimize_kernel(KernelSpec(2, 2, True))


def test_unknown_metric():
    with pytest.raises(ValueError):
        optimize_kernel(KernelSpec(2, 2), "ed")


def test_report_is_deterministic_and_complete():
    a = optimize_kernel(KernelSpec(2, 2)).report()
    b = optimize_kernel(KernelSpec(2, 2)).report()
    assert a == b
    assert a["n_pd_minima"] == 1
    cp = a["critical_points"][0]
    assert cp["hessian_eigenvalue_signs"] == [1]
    assert a["settings"]["seed"] == 20211


def test_no_start_converges_gives_empty_list():
    # x**2 + 1 has no real root
    g = MultiPoly.univariate("c", [1, 0, 1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert find_critical_points([g], ["c"], starts=10) == []


@pytest.mark.parametrize("label", ["K_2_2", "K_2_4_S", "K_3_3_S", "K_5_2_3", "K_2_3"])
def test_average_metric_close_to_half_metric(label):
    spec = parse_spec(label)
    a = optimized(spec).kernel
    b = optimized(spec, "eg_avg").kernel
    assert kernel_sup_distance(a, b) <= 0.006
