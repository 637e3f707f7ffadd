import math
import warnings

import numpy as np
import pytest

from sasaki_approx.calculus import (
    ChartFunction,
    FiniteDifferenceWarning,
    NonKahlerError,
    QuadratureRule,
    ddbar,
    gauss_legendre,
    halton,
    integrate_chart,
    loglog_slope,
    scalar_curvature,
)
from sasaki_approx.orbifold import ChartMetric, ToricMetric, WeightedProjectiveLine


def fs_density(z):
    return 1.0 / (np.pi * (1.0 + np.abs(z) ** 2) ** 2)


FS_DENSITY = ChartFunction(fs_density, radial=True)
FS_POTENTIAL = ChartFunction(lambda z: np.log1p(np.abs(z) ** 2), radial=True)


def test_quadrature_weights_sum_to_one():
    for radial in (True, False):
        _, _, w = QuadratureRule(50, 16).nodes(radial)
        assert abs(w.sum() - 1.0) < 1e-14


def test_gauss_legendre_interval():
    x, w = gauss_legendre(10, 2.0, 5.0)
    assert abs(np.sum(w * x**3) - (5.0**4 - 2.0**4) / 4) < 1e-11


def test_integrate_unit_area():
    one = ChartFunction(lambda z: np.ones(z.shape), radial=True)
    assert abs(integrate_chart(one, FS_DENSITY) - 1.0) < 1e-12


@pytest.mark.parametrize("j,k", [(2, 2), (0, 3), (1, 4), (3, 7)])
def test_integrate_beta_gram(j, k):
    # <z^j, z^j> under h^k = j! (k-j)! / (k+1)!
    f = ChartFunction(lambda z: np.abs(z) ** (2 * j) / (1 + np.abs(z) ** 2) ** k, radial=True)
    exact = math.factorial(j) * math.factorial(k - j) / math.factorial(k + 1)
    assert abs(integrate_chart(f, FS_DENSITY) - exact) < 1e-13


def test_integrate_non_radial_integrand():
    f = ChartFunction(lambda z: np.real(z) ** 2 / (1 + np.abs(z) ** 2) ** 2)
    # half of |z|^2/(1+|z|^2)^2 by angular symmetry: 0.5 * 1!1!/3!
    assert abs(integrate_chart(f, FS_DENSITY, QuadratureRule(200, 16)) - 1.0 / 12) < 1e-13


def test_integrate_rejects_non_finite():
    bad = ChartFunction(lambda z: np.full(z.shape, np.nan), radial=True)
    with pytest.raises(ValueError):
        integrate_chart(bad, FS_DENSITY)


@pytest.mark.parametrize("z", [0.0, 0.3 + 0.2j, -1.5j, 2.0])
def test_ddbar_quadratic(z):
    assert abs(ddbar(lambda w: np.abs(w) ** 2, z) - 1.0) < 1e-8


def test_ddbar_fs_potential():
    assert abs(ddbar(FS_POTENTIAL, 0.0) - 1.0) < 1e-8
    assert abs(ddbar(FS_POTENTIAL, 1.0) - 0.25) < 1e-8
    z = np.array([0.5, 1j, 2 + 1j])
    np.testing.assert_allclose(ddbar(FS_POTENTIAL, z), 1 / (1 + np.abs(z) ** 2) ** 2, atol=1e-9)


def test_ddbar_warns_on_tiny_step():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        ddbar(FS_POTENTIAL, 0.3, step=1e-7)
    assert any(issubclass(r.category, FiniteDifferenceWarning) for r in rec)


def test_scalar_curvature_flat():
    assert abs(scalar_curvature(lambda z: np.abs(z) ** 2, 0.4 + 0.1j)) < 1e-6


def test_scalar_curvature_round_sphere():
    z = np.array([0.0, 0.5, 1 + 1j, 3.0])
    np.testing.assert_allclose(scalar_curvature(FS_POTENTIAL, z, bundle_degree=1), 8 * np.pi, rtol=1e-7)


def test_scalar_curvature_rejects_non_kahler():
    with pytest.raises(NonKahlerError):
        scalar_curvature(lambda z: -np.abs(z) ** 2, 0.2)


@pytest.mark.parametrize("metric", [ChartMetric(), ChartMetric(0.1, "radial")])
def test_gauss_bonnet_cp1(metric):
    # int (Scal/2) dA = 4 pi with dA = (lam / pi) dx dy
    half_scal = ChartFunction(lambda z: 0.5 * scalar_curvature(metric.phi, z, bundle_degree=1), radial=True)
    dens = ChartFunction(lambda z: metric.curvature_density(z) / np.pi, radial=True)
    assert abs(integrate_chart(half_scal, dens, QuadratureRule(120)) - 4 * np.pi) < 1e-6


def test_gauss_bonnet_cp12():
    # integral of the Gaussian curvature is 2 pi (1/a + 1/b) on the orbifold
    for eps in (0.0, 0.1):
        m = ToricMetric(WeightedProjectiveLine(1, 2), eps)
        x, w = m.quadrature(QuadratureRule(200))
        total = 2 * np.pi * np.sum(w * m.scal(x))
        assert abs(total - 2 * np.pi * 1.5) < 1e-4


def test_toric_scal_matches_finite_differences():
    # Kähler-normalized scal is the Riemannian value over 4 pi
    m = ToricMetric(WeightedProjectiveLine(1, 2), 0.1)
    z = np.array([0.3, 0.8, 1.5])
    x = m.x_of_rho(np.log(np.abs(z) ** 2))
    fd = scalar_curvature(m.potential(), z) / (4 * np.pi)
    np.testing.assert_allclose(fd, m.scal(x), atol=1e-5)


def test_loglog_slope_power_law():
    fit = loglog_slope([(10, 1e-2), (20, 2.5e-3), (40, 6.25e-4)])
    assert abs(fit.slope + 2.0) < 1e-12
    assert fit.residual < 1e-12


def test_loglog_slope_constant():
    assert abs(loglog_slope([(10, 3.0), (20, 3.0), (40, 3.0)]).slope) < 1e-12


def test_loglog_slope_errors():
    with pytest.raises(ValueError):
        loglog_slope([(10, 1.0), (20, 0.5)])
    with pytest.raises(ValueError):
        loglog_slope([(10, 1.0), (20, 0.0), (40, 0.1)])


def test_halton_deterministic_and_jittered():
    a = halton(50, 2)
    np.testing.assert_array_equal(a, halton(50, 2))
    assert np.all((a >= 0) & (a < 1))
    b = halton(50, 2, seed=3, jitter=1e-3)
    np.testing.assert_array_equal(b, halton(50, 2, seed=3, jitter=1e-3))
    shift = np.mod(b - a + 0.5, 1.0) - 0.5
    assert 0 < np.max(np.abs(shift)) <= 1e-3 + 1e-12
