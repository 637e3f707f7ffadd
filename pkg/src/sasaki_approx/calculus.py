"""Chart-level calculus on CP^1-type charts.

Quadrature over a compactified affine chart, finite-difference mixed complex
derivatives, scalar curvature of a Kähler potential and log-log rate fits.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc


class FiniteDifferenceWarning(UserWarning):
    """Roundoff dominates a finite-difference estimate."""


class NonKahlerError(ValueError):
    """A curvature density that should be positive is not."""


@dataclass(frozen=True)
class ChartFunction:
    """Real function on an affine chart, vectorized over complex arrays."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    radial: bool = False

    def __call__(self, z):
        return self.evaluator(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre in s = r^2/(1+r^2) tensored with a trapezoid in theta.

    The weights integrate against ds dtheta / (2 pi), i.e. the unit-area
    Fubini-Study form, so they sum to one.
    """

    n_r: int = 200
    n_theta: int = 64

    def __post_init__(self):
        if self.n_r < 1 or self.n_theta < 1:
            raise ValueError("quadrature resolutions must be positive")

    @property
    def s_nodes(self) -> np.ndarray:
        return _gauss_legendre_01(self.n_r)[0]

    @property
    def s_weights(self) -> np.ndarray:
        return _gauss_legendre_01(self.n_r)[1]

    @property
    def theta_nodes(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    def nodes(self, radial: bool = False):
        """Return (z, s, weights) flattened over the tensor grid."""
        s, ws = _gauss_legendre_01(self.n_r)
        if radial:
            return np.sqrt(s / (1.0 - s)).astype(complex), s, ws.copy()
        th = self.theta_nodes
        S, TH = np.meshgrid(s, th, indexing="ij")
        W = np.repeat(ws[:, None], self.n_theta, axis=1) / self.n_theta
        z = np.sqrt(S / (1.0 - S)) * np.exp(1j * TH)
        return z.ravel(), S.ravel(), W.ravel()


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre_01(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * (x + 1.0), 0.5 * w)
    return _GL_CACHE[n]


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _gauss_legendre_01(n)
    return a + (b - a) * x, (b - a) * w


def integrate_chart(f, density, rule: QuadratureRule = QuadratureRule()) -> float:
    """Integrate ``f * density`` against dx dy over the whole chart.

    Both arguments are :class:`ChartFunction` (or plain callables). When both
    are radial the angular sum collapses to a single node.
    """
    radial = getattr(f, "radial", False) and getattr(density, "radial", False)
    z, s, w = rule.nodes(radial=radial)
    # dx dy = ds dtheta / (2 (1-s)^2) and the rule weights carry 1/(2 pi)
    jac = np.pi / (1.0 - s) ** 2
    vals = np.asarray(f(z), dtype=float) * np.asarray(density(z), dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValueError(f"non-finite integrand at node z={z[i]!r}")
    return float(np.sum(vals * jac * w))


def _laplacian(f, z, h):
    return (f(z + h) + f(z - h) + f(z + 1j * h) + f(z - 1j * h) - 4.0 * f(z)) / h**2


def ddbar(f, z, step: float = 1e-3, warn_tol: float = 1e-6, levels: int = 2):
    """d^2 f / dz dzbar by a five-point Laplacian with Richardson extrapolation.

    ``levels`` Laplacians at step, step/2, ... are combined into an
    O(step^(2 levels)) estimate.  Roundoff is of order eps |f| / h^2 for the
    smallest step h; a :class:`FiniteDifferenceWarning` is issued when that
    estimate exceeds ``warn_tol`` relative to the result.
    """
    z = np.asarray(z, dtype=complex)
    table = [_laplacian(f, z, step / 2**j) for j in range(levels)]
    for order in range(1, levels):
        fac = 4.0**order
        table = [(fac * table[j + 1] - table[j]) / (fac - 1.0) for j in range(len(table) - 1)]
    val = 0.25 * table[0]
    h = step / 2 ** (levels - 1)
    fz = np.abs(np.asarray(f(z), dtype=float))
    roundoff = 16.0 * np.finfo(float).eps * np.maximum(fz, 1.0) / h**2
    if np.any(roundoff > warn_tol * np.maximum(np.abs(val), 1.0)):
        warnings.warn("ddbar step too small for double precision", FiniteDifferenceWarning)
    return val if val.ndim else float(val)


def _other_chart(phi, degree):
    def phi_u(u):
        u = np.asarray(u, dtype=complex)
        return phi(1.0 / u) + degree * np.log(np.abs(u) ** 2)

    return phi_u


def scalar_curvature(phi, z, step: float = 8e-2, bundle_degree: int | None = None, levels: int = 3):
    """Riemannian scalar curvature of the metric with area form (lam/pi) dx dy.

    ``lam = ddbar(phi)``; the result is ``-(4 pi / lam) ddbar(log lam)``,
    twice the Gaussian curvature, so the unit-area round sphere gives 8 pi.
    With ``bundle_degree`` set, ``phi`` is treated as a potential for
    O(bundle_degree) on CP^1 and points with |z| > 1 are evaluated in the
    opposite chart, where the finite differences are better conditioned.
    The two nested Laplacians use large steps and ``levels`` Richardson
    levels: roundoff in the inner one is amplified by 1/h^2 in the outer.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape, dtype=float)
    far = np.abs(z) > 1.0 if bundle_degree is not None else np.zeros(z.shape, bool)
    for mask, pot, pts in (
        (~far, phi, z),
        (far, _other_chart(phi, bundle_degree) if bundle_degree else phi, 1.0 / np.where(far, z, 1.0)),
    ):
        if not mask.any():
            continue
        p = pts[mask]
        lam = ddbar(pot, p, step, levels=levels)
        if np.any(lam <= 0):
            raise NonKahlerError("ddbar(phi) <= 0: not a Kähler potential")
        loglam = lambda w: np.log(ddbar(pot, w, step, levels=levels))
        out[mask] = -4.0 * np.pi * ddbar(loglam, p, step, levels=levels) / lam
    return out if out.size > 1 else float(out[0])


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through (log k, log value)."""

    ks: tuple
    values: tuple
    slope: float
    intercept: float
    residual: float


def loglog_slope(samples: Sequence[tuple[float, float]]) -> RateFit:
    if len(samples) < 3:
        raise ValueError("need at least 3 samples for a rate fit")
    ks = np.array([k for k, _ in samples], dtype=float)
    vals = np.array([v for _, v in samples], dtype=float)
    for k, v in zip(ks, vals):
        if not v > 0:
            raise ValueError(f"non-positive value {v!r} at k={k:g}; truncate the k-range")
    lk, lv = np.log(ks), np.log(vals)
    slope, intercept = np.polyfit(lk, lv, 1)
    resid = float(np.sqrt(np.mean((lv - (slope * lk + intercept)) ** 2)))
    return RateFit(tuple(ks.tolist()), tuple(vals.tolist()), float(slope), float(intercept), resid)


def halton(n: int, dim: int, seed: int = 0, jitter: float = 0.0) -> np.ndarray:
    """Deterministic Halton points in [0,1)^dim with optional seeded jitter."""
    pts = qmc.Halton(d=dim, scramble=False).random(n + 1)[1:]
    if jitter:
        rng = np.random.default_rng(seed)
        pts = np.mod(pts + jitter * rng.uniform(-1.0, 1.0, size=pts.shape), 1.0)
    return pts
