import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint
from scipy.stats import norm

from teqkd.errors import DomainError, NonConvergence
from teqkd.numerics import (
    QuadratureSpec,
    antiderivative_Q,
    antiderivative_Q2,
    entropy,
    entropy_binary,
    entropy_ternary,
    f_sigma,
    gauss_legendre_panels,
    gaussian_tail,
    integrate,
    q_diff,
    xlog2x,
)


def test_gaussian_tail_known_values():
    assert gaussian_tail(0.0) == 0.5
    assert gaussian_tail(1.0) == pytest.approx(norm.sf(1.0), rel=1e-15)
    # deep tail keeps relative precision
    assert gaussian_tail(30.0) == pytest.approx(norm.sf(30.0), rel=1e-12)
    assert gaussian_tail(37.0) == pytest.approx(norm.sf(37.0), rel=1e-12)


def test_q_diff_far_tail_relative_precision():
    # difference of two tails ~1e-200; naive 1 - cdf would return 0
    a, b = 30.0, 30.5
    assert q_diff(a, b) == pytest.approx(norm.sf(a) - norm.sf(b), rel=1e-12)
    assert q_diff(-b, -a) == pytest.approx(norm.sf(a) - norm.sf(b), rel=1e-12)


@given(st.floats(-50, 50), st.floats(0, 20))
def test_q_diff_matches_cdf_and_is_nonnegative(a, w):
    b = a + w
    val = q_diff(a, b)
    assert val >= 0.0
    assert val == pytest.approx(norm.cdf(b) - norm.cdf(a), abs=1e-15)


def test_q_diff_vectorized_shape():
    a = np.zeros((3, 4))
    assert q_diff(a, a + 1.0).shape == (3, 4)


@given(st.floats(0.0, 1.0), st.floats(0.001, 3.0))
def test_f_sigma_reflection_and_range(x, s):
    v = f_sigma(x, s)
    assert 0.0 <= v <= 1.0
    # exact symmetry whenever 1 - x is exactly representable
    if (1.0 - x) + x == 1.0 and 1.0 - (1.0 - x) == x:
        assert f_sigma(1.0 - x, s) == v


def test_f_sigma_rejects_bad_sigma():
    with pytest.raises(DomainError):
        f_sigma(0.3, 0.0)


@pytest.mark.parametrize("a", [0.7, 3.0, 25.0])
def test_antiderivatives_differentiate_back(a):
    x = np.linspace(-0.5, 1.5, 9)
    h = 1e-5
    dq = (antiderivative_Q(a, x + h) - antiderivative_Q(a, x - h)) / (2 * h)
    dq2 = (antiderivative_Q2(a, x + h) - antiderivative_Q2(a, x - h)) / (2 * h)
    np.testing.assert_allclose(dq, gaussian_tail(a * x), atol=1e-8)
    np.testing.assert_allclose(dq2, gaussian_tail(a * x) ** 2, atol=1e-8)


def test_antiderivative_Q2_definite_integral_against_quad():
    a = 12.0
    exact = antiderivative_Q2(a, 1.0) - antiderivative_Q2(a, 0.0)
    ref, _ = sint.quad(lambda x: norm.sf(a * x) ** 2, 0.0, 1.0, epsabs=1e-14)
    assert exact == pytest.approx(ref, rel=1e-10)


def test_antiderivative_zero_slope_rejected():
    with pytest.raises(DomainError):
        antiderivative_Q(0.0, 1.0)


def test_xlog2x_conventions():
    assert xlog2x(0.0) == 0.0
    assert xlog2x(1.0) == 0.0
    assert xlog2x(0.5) == -0.5
    assert xlog2x(-1e-18) == 0.0


def test_entropies():
    assert entropy_binary(0.5) == pytest.approx(1.0)
    assert entropy_binary(0.0) == 0.0
    assert entropy_ternary(1.0 / 3.0) == pytest.approx(math.log2(3.0))
    assert entropy(np.full(8, 0.125)) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        entropy_binary(1.2)
    with pytest.raises(DomainError):
        entropy_ternary(0.6)


def test_integrate_smooth_and_vector_valued():
    assert integrate(np.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-13)
    vec = integrate(lambda x: np.stack([x, x**2], axis=1), 0.0, 1.0)
    np.testing.assert_allclose(vec, [0.5, 1.0 / 3.0], atol=1e-14)
    assert integrate(np.cos, 1.0, 1.0) == 0.0


def test_integrate_narrow_feature_needs_breakpoint():
    s = 1e-3
    f = lambda x: norm.pdf(x - 0.3, scale=s)
    assert integrate(f, 0.0, 1.0, points=[0.3 - 8 * s, 0.3, 0.3 + 8 * s]) == pytest.approx(1.0, abs=1e-11)


def test_integrate_is_bitwise_reproducible():
    f = lambda x: np.exp(-x) * np.sin(7 * x)
    assert integrate(f, 0.0, 3.0) == integrate(f, 0.0, 3.0)


def test_integrate_budget():
    with pytest.raises(NonConvergence):
        integrate(lambda x: np.sign(x - 0.3141), 0.0, 1.0, QuadratureSpec(abs_tol=1e-15, max_subdivisions=20))
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)


def test_gauss_legendre_panels_polynomial_exactness():
    nodes, w = gauss_legendre_panels(np.array([0.0, -1.0]), np.array([2.0, 3.0]), 4, 5)
    assert nodes.shape == (2, 20)
    np.testing.assert_allclose(np.sum(w * nodes**7, axis=1), [2**8 / 8, (3**8 - 1) / 8], rtol=1e-13)


@settings(max_examples=30)
@given(st.floats(-3, 3), st.floats(0.01, 4))
def test_integrate_gaussian_cdf(a, w):
    val = integrate(norm.pdf, a, a + w)
    assert val == pytest.approx(norm.cdf(a + w) - norm.cdf(a), abs=1e-12)
