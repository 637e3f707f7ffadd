import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sasaki_approx.bergman import (
    BergmanFamily,
    GramMatrix,
    IllConditionedGramError,
    expansion_fit,
    expansion_formulas,
    hilb_gram,
    orthonormality_residual,
    orthonormalize,
    weight_coeffs,
)
from sasaki_approx.calculus import QuadratureRule
from sasaki_approx.orbifold import ChartMetric, ToricMetric, WeightedProjectiveLine, h0

CP12 = WeightedProjectiveLine(1, 2)


@pytest.mark.parametrize("m,p,expect", [(2, 1, (1, 1)), (2, 2, (1, 2, 1)), (3, 2, (1, 2, 3, 2, 1)), (1, 4, (1,))])
def test_weight_coeffs_examples(m, p, expect):
    assert weight_coeffs(m, p).coeffs == expect


def test_weight_coeffs_palindromic_and_total():
    for m in range(1, 7):
        for p in range(1, 7):
            c = weight_coeffs(m, p).coeffs
            assert c == c[::-1]
            assert sum(c) == m**p
            assert len(c) == p * (m - 1) + 1


def test_weight_coeffs_rejects_bad_input():
    with pytest.raises(ValueError):
        weight_coeffs(0, 2)


def test_gram_fs_beta_closed_form():
    G = hilb_gram(ChartMetric(), 2)
    assert G.diagonal
    np.testing.assert_allclose(np.diag(G.matrix), [1 / 3, 1 / 6, 1 / 3], atol=1e-14)


def test_gram_full_integration_off_diagonals_vanish():
    # nonradial kind with eps = 0 forces the 2D quadrature on the FS metric
    G = hilb_gram(ChartMetric(0.0, "nonradial", 2), 4, rule=QuadratureRule(120, 32))
    assert not G.diagonal
    k = 4
    exact = [math.factorial(j) * math.factorial(k - j) / math.factorial(k + 1) for j in range(k + 1)]
    np.testing.assert_allclose(np.diag(G.matrix).real, exact, atol=1e-14)
    off = G.matrix - np.diag(np.diag(G.matrix))
    assert np.max(np.abs(off)) < 1e-13


def test_gram_weight_scales_inverse():
    G1 = hilb_gram(ChartMetric(0.1, "radial"), 5)
    G5 = hilb_gram(ChartMetric(0.1, "radial"), 5, weight=5.0)
    np.testing.assert_allclose(G5.matrix, G1.matrix / 5.0, rtol=1e-14)


def test_gram_toric_is_diagonal():
    for k in (3, 8):
        assert hilb_gram(ToricMetric(CP12, 0.1), k).diagonal


def test_gram_nonradial_has_coupling():
    G = hilb_gram(ChartMetric(0.1, "nonradial", 2), 6)
    off = G.matrix - np.diag(np.diag(G.matrix))
    assert np.max(np.abs(off)) > 1e-4


def test_gram_empty_degree_rejected():
    with pytest.raises(ValueError):
        hilb_gram(ToricMetric(WeightedProjectiveLine(2, 3), 0.0), 1)


def test_orthonormalize_diagonal_and_identity():
    G = GramMatrix(2, np.diag([4.0, 0.25, 9.0]), True)
    np.testing.assert_allclose(orthonormalize(G), np.diag([0.5, 2.0, 1 / 3]))
    np.testing.assert_allclose(orthonormalize(np.eye(4)), np.eye(4), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=2, max_value=8))
def test_orthonormalize_random_spd(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    scales = np.exp(rng.uniform(-6, 6, size=n))
    G = (A @ A.conj().T + n * np.eye(n)) * np.outer(scales, scales)
    assert orthonormality_residual(G, orthonormalize(G)) < 1e-10


def test_orthonormalize_indefinite_raises():
    with pytest.raises(IllConditionedGramError):
        orthonormalize(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_nonradial_orthonormality_residual():
    G = hilb_gram(ChartMetric(0.1, "nonradial", 2), 30)
    assert orthonormality_residual(G, orthonormalize(G)) < 1e-10


def test_fs_kernel_examples():
    fam = BergmanFamily(ChartMetric())
    z = np.array([0.0, 0.3 + 0.1j, 2.0, -5j])
    np.testing.assert_allclose(fam.kernel(3, z), 4.0, atol=1e-8)
    np.testing.assert_allclose(fam.kernel(3, z, 5.0), 20.0, atol=1e-7)


def test_balanced_fixed_point():
    fam = BergmanFamily(ChartMetric(), p=2)
    z = ChartMetric().sample_grid(40, 0)
    for k in range(1, 31):
        B = fam.kernels(k, z)
        for (i, d, c), row in zip(fam.degrees(k), B):
            np.testing.assert_allclose(row, c * (d + 1), rtol=1e-7)
        np.testing.assert_allclose(fam.weighted_kernel(k, z), fam.c_constant(k), rtol=1e-7)


@pytest.mark.parametrize(
    "metric",
    [ChartMetric(0.1, "radial"), ChartMetric(0.1, "nonradial", 2), ToricMetric(CP12, 0.1), ToricMetric(WeightedProjectiveLine(2, 3), 0.1)],
)
def test_trace_identity(metric):
    fam = BergmanFamily(metric)
    for k in (6, 17, 30):
        for _, d, c in fam.degrees(k):
            n = h0(metric.orbifold, d)
            if n:
                assert abs(fam.trace(d, c) - n) < 1e-6 * n


@pytest.mark.parametrize("metric", [ChartMetric(0.1, "radial"), ToricMetric(CP12, 0.1)])
def test_weighted_kernel_averages_to_c(metric):
    fam = BergmanFamily(metric)
    pts, w = metric.quadrature(fam.rule)
    for k in (10, 25):
        avg = np.sum(w * fam.weighted_kernel(k, pts)) / fam.volume
        assert abs(avg / fam.c_constant(k) - 1) < 1e-6


def test_c_constant_increasing_and_kernels_positive():
    for metric in (ChartMetric(0.1, "radial"), ToricMetric(CP12, 0.1)):
        fam = BergmanFamily(metric)
        cs = [fam.c_constant(k) for k in range(2, 40)]
        assert all(b > a for a, b in zip(cs, cs[1:]))
        pts = metric.sample_grid(50, 0)
        for k in (2, 10, 30):
            assert np.all(fam.kernels(k, pts).sum(axis=0) > 0)


def test_degenerate_weighting():
    fam = BergmanFamily(ChartMetric(0.1, "radial"), p=1)
    z = np.array([0.4, 1.3])
    assert fam.weights.coeffs == (1,)
    np.testing.assert_allclose(fam.weighted_kernel(12, z), 12 * fam.kernel(12, z))


def test_expansion_fit_fs():
    fam = BergmanFamily(ChartMetric(), p=2)
    z = ChartMetric().sample_grid(10, 0)
    ks = list(range(10, 41, 5))
    fit = expansion_fit(ks, [fam.weighted_kernel(k, z) for k in ks])
    b0, b1 = expansion_formulas(fam, z)
    np.testing.assert_allclose(fit.b0, b0, rtol=1e-10)
    np.testing.assert_allclose(fit.b1, b1, rtol=1e-9)


def test_expansion_fit_b0_constant_on_perturbed_metric():
    fam = BergmanFamily(ChartMetric(0.1, "radial"))
    z = fam.metric.sample_grid(30, 0)
    ks = list(range(10, 41, 2))
    fit = expansion_fit(ks, [fam.weighted_kernel(k, z) for k in ks])
    assert (fit.b0.max() - fit.b0.min()) < 0.01 * fit.b0.mean()


def test_expansion_fit_needs_wide_range():
    with pytest.raises(ValueError):
        expansion_fit([10, 12, 14], np.ones((3, 2)))
    with pytest.raises(ValueError):
        expansion_fit([10, 11, 12, 13, 14], np.ones((5, 2)))
