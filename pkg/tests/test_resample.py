import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernelforge.kernelspace import KernelSpec, general_solution, instantiate
from kernelforge.resample import (BOUNDARIES, ResamplePlan, bspline_prefilter, extend_index,
                                  prefilter_horizon, resample_1d, resample_2d, resample_direct,
                                  weight_matrix)
from kernelforge.zoo import (bspline, bspline_interp, bspline_pole, keys_33, keys_cubic,
                             lagrange, linear, mitchell_netravali, reference_kernel, wrap)


def _family(spec, value=Fraction(-1, 3)):
    gs = general_solution(spec)
    return wrap(instantiate(gs, {n: value for n in gs.free_names}))


CONSTRAINT_BUILT = [wrap(linear()), wrap(keys_cubic()), _family(KernelSpec(2, 2)),
                    _family(KernelSpec(Fraction(5, 2), 3)), _family(KernelSpec(3, 4, True)),
                    _family(KernelSpec(Fraction(3, 2), 4))]
IDS = [k.name for k in CONSTRAINT_BUILT]


def test_extend_index():
    idx = np.arange(-3, 8)
    rep, _ = extend_index(idx, 5, "replicate")
    assert rep.tolist() == [0, 0, 0, 0, 1, 2, 3, 4, 4, 4, 4]
    ref, _ = extend_index(idx, 5, "reflect")
    assert ref.tolist() == [3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]
    _, mask = extend_index(idx, 5, "zero")
    assert mask.tolist() == [False] * 3 + [True] * 5 + [False] * 3
    with pytest.raises(ValueError):
        extend_index(idx, 5, "wrap")


def test_plan_validation_and_length():
    k = wrap(linear())
    assert ResamplePlan(k, Fraction(12)).output_length(31) == 361
    assert ResamplePlan(k, "8").output_length(300) == 2393
    assert ResamplePlan(k, 8, size=2400).output_length(300) == 2400
    assert ResamplePlan(k, Fraction(1, 2)).output_length(9) == 5
    with pytest.raises(ValueError):
        ResamplePlan(k, 0)
    with pytest.raises(ValueError):
        ResamplePlan(k, 2, boundary="wrap")


def test_positions_exact():
    pos = ResamplePlan(wrap(linear()), Fraction(3), Fraction(1, 2)).positions(4)
    assert len(pos) == 8
    assert pos.tolist() == [float(Fraction(i, 3) + Fraction(1, 2)) for i in range(8)]


@pytest.mark.parametrize("boundary", BOUNDARIES[:2])
@pytest.mark.parametrize("kernel", CONSTRAINT_BUILT, ids=IDS)
def test_constant_preserved(kernel, boundary):
    s = np.full(17, 0.37)
    out = resample_1d(s, ResamplePlan(kernel, Fraction(7, 3), Fraction(1, 5), boundary))
    np.testing.assert_allclose(out, 0.37, atol=1e-14)


def test_zero_boundary_constant_interior():
    k = wrap(keys_cubic())
    out = resample_1d(np.ones(20), ResamplePlan(k, 4, 0, "zero"))
    np.testing.assert_allclose(out[8:-8], 1.0, atol=1e-14)
    assert out[0] == pytest.approx(1.0)  # psi vanishes at nonzero integers
    assert abs(out[2] - 1.0) > 1e-3


@pytest.mark.parametrize("kernel", CONSTRAINT_BUILT, ids=IDS)
def test_ramp_exact_in_interior(kernel):
    n = 24
    plan = ResamplePlan(kernel, Fraction(5, 2), 0)
    out = resample_1d(np.arange(n, dtype=float), plan)
    pos = plan.positions(n)
    r = math.ceil(kernel.radius)
    inner = (pos >= r) & (pos <= n - 1 - r)
    np.testing.assert_allclose(out[inner], pos[inner], atol=1e-12)


@pytest.mark.parametrize("name", ["linear", "keys", "keys33", "lagrange:3", "lanczos:3",
                                  "bspline:3", "K_2_2"])
def test_identity_at_unit_scale(name):
    rng = np.random.default_rng(1)
    s = rng.random(30)
    out = resample_1d(s, ResamplePlan(reference_kernel(name), 1, 0, "reflect"))
    np.testing.assert_allclose(out, s, atol=1e-10)


def test_mitchell_netravali_not_identity():
    rng = np.random.default_rng(2)
    img = rng.random((12, 12))
    out = resample_2d(img, ResamplePlan(wrap(mitchell_netravali()), 1))
    assert np.max(np.abs(out - img)) > 1e-3


@pytest.mark.parametrize("boundary", BOUNDARIES)
@pytest.mark.parametrize("kernel", [wrap(keys_cubic()), wrap(lagrange(3)),
                                    _family(KernelSpec(Fraction(5, 2), 3))],
                         ids=["keys", "lagrange3", "K523"])
def test_separable_matches_direct(kernel, boundary):
    rng = np.random.default_rng(16)
    img = rng.random((16, 16))
    plan = ResamplePlan(kernel, Fraction(3, 2), Fraction(1, 3), boundary)
    np.testing.assert_allclose(resample_2d(img, plan), resample_direct(img, plan), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from(BOUNDARIES),
       st.fractions(Fraction(1, 3), 5, max_denominator=6))
def test_pass_order_commutes(seed, boundary, scale):
    rng = np.random.default_rng(seed)
    img = rng.random((9, 11))
    plan = ResamplePlan(wrap(keys_33()), scale, 0, boundary)
    a = resample_2d(img, plan, order="rows-first")
    b = resample_2d(img, plan, order="columns-first")
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_one_hot_upscale_samples_kernel():
    k = wrap(keys_cubic())
    img = np.zeros((9, 9))
    img[4, 4] = 1.0
    plan = ResamplePlan(k, 4, 0, "zero")
    out = resample_2d(img, plan)
    pos = plan.positions(9) - 4
    np.testing.assert_allclose(out, np.outer(k(pos), k(pos)), atol=1e-15)


@pytest.mark.parametrize("kernel", CONSTRAINT_BUILT, ids=IDS)
def test_affine_image_exact_interior(kernel):
    n = 20
    yy, xx = np.mgrid[0:n, 0:n].astype(float)
    img = 0.3 + 0.05 * xx - 0.02 * yy
    plan = ResamplePlan(kernel, Fraction(3), 0)
    out = resample_2d(img, plan)
    pos = plan.positions(n)
    truth = 0.3 + 0.05 * pos[None, :] - 0.02 * pos[:, None]
    r = math.ceil(kernel.radius)
    inner = (pos >= r) & (pos <= n - 1 - r)
    np.testing.assert_allclose(out[np.ix_(inner, inner)], truth[np.ix_(inner, inner)], atol=1e-12)


def test_weight_matrix_rows_sum_to_one():
    W = weight_matrix(wrap(keys_cubic()), 10, np.linspace(0, 9, 37), "reflect")
    np.testing.assert_allclose(W.sum(axis=1), 1.0, atol=1e-14)


def test_non_finite_kernel_errors():
    def bad(x):
        return np.full(np.shape(x), np.inf)
    bad.radius = 2.0
    with pytest.raises(FloatingPointError):
        resample_1d(np.ones(5), ResamplePlan(bad, 2))


def test_dimension_checks():
    k = wrap(linear())
    with pytest.raises(ValueError):
        resample_1d(np.ones((3, 3)), ResamplePlan(k))
    with pytest.raises(ValueError):
        resample_2d(np.ones(3), ResamplePlan(k))
    with pytest.raises(ValueError):
        resample_2d(np.ones((3, 3)), ResamplePlan(k), order="diagonal")


# --- prefilter


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("boundary", BOUNDARIES[:2])
def test_prefilter_constant(p, boundary):
    np.testing.assert_allclose(bspline_prefilter(np.full(25, 2.5), p, boundary), 2.5, atol=1e-12)


def _reconstruct(c, p, n):
    # sum_k c[k] beta_p(m - k) with mirrored coefficients past the ends
    m = np.arange(n)
    out = np.zeros(n)
    for k in range(-4, n + 4):
        kk, _ = extend_index(np.array(k), n, "reflect")
        out += c[int(kk)] * bspline(m - k, p)
    return out


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([2, 3]), st.integers(2, 60))
def test_prefilter_round_trip(seed, p, n):
    s = np.random.default_rng(seed).random(n)
    c = bspline_prefilter(s, p, "reflect")
    np.testing.assert_allclose(_reconstruct(c, p, n), s, atol=1e-10)


def test_prefilter_axis_argument():
    rng = np.random.default_rng(5)
    img = rng.random((7, 13))
    cols = bspline_prefilter(img, 3, axis=0)
    for j in range(13):
        np.testing.assert_allclose(cols[:, j], bspline_prefilter(img[:, j], 3), atol=1e-15)


def test_prefilter_invalid_degree():
    with pytest.raises(ValueError):
        bspline_prefilter(np.ones(4), 5)


def test_prefilter_horizon():
    z = bspline_pole(3)
    h = prefilter_horizon(z)
    assert abs(z) ** h < 1e-14 <= abs(z) ** (h - 1)
    assert prefilter_horizon(z, 5) == 5


@pytest.mark.parametrize("p", [2, 3])
def test_prefiltered_equals_explicit_kernel(p):
    rng = np.random.default_rng(p)
    s = rng.random(80)
    k = bspline_interp(p)
    via_filter = resample_1d(s, ResamplePlan(k, Fraction(5, 2), 0, "reflect"))
    explicit = resample_1d(s, ResamplePlan(k, Fraction(5, 2), 0, "reflect", prefilter=False))
    pos = ResamplePlan(k, Fraction(5, 2)).positions(80)
    inner = (pos > 25) & (pos < 54)
    np.testing.assert_allclose(via_filter[inner], explicit[inner], atol=1e-8)
