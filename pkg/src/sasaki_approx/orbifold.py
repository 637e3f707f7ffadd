"""Polarized orbifolds CP(a, b) with O(1) and hermitian metrics on it.

Two metric families are provided:

``ChartMetric``
    CP^1 only; potential phi = log(1+|z|^2) + eps * Y on the affine chart,
    where Y is a spherical harmonic (radial ``s(1-s)`` or non-radial
    ``Re(z^d)/(1+|z|^2)^d``).  Curvature and scalar curvature are closed form.

``ToricMetric``
    Any CP(a, b); a torus-invariant metric given by its symplectic profile
    Psi(x) on the moment interval [0, 1].  Scalar curvature is -b^2 Psi''
    and the Liouville measure is dx / (ab).

Both expose the same small surface used by the Bergman machinery:
``volume``, ``radial``, ``quadrature(rule)``, ``section_values(d, pts)``,
``scal(pts)``, ``relative_ddbar(F, pts)``, ``cone_t(w)`` and ``sample_grid``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .calculus import (
    ChartFunction,
    NonKahlerError,
    QuadratureRule,
    gauss_legendre,
    halton,
    integrate_chart,
)


@dataclass(frozen=True)
class WeightedProjectiveLine:
    a: int = 1
    b: int = 1

    def __post_init__(self):
        if self.a < 1 or self.b < 1:
            raise ValueError("weights must be positive integers")
        if math.gcd(self.a, self.b) != 1:
            raise ValueError(f"weights ({self.a}, {self.b}) are not coprime")

    @property
    def order(self) -> int:
        return math.lcm(self.a, self.b)

    @property
    def local_groups(self) -> tuple[int, int]:
        return (self.a, self.b)

    @property
    def volume(self) -> float:
        return 1.0 / (self.a * self.b)

    def __str__(self):
        return f"CP({self.a},{self.b})"


@dataclass(frozen=True)
class MonomialBasis:
    """Monomials z0^p z1^q of weighted degree a p + b q = degree, by increasing q."""

    degree: int
    exponents: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.exponents)

    @property
    def q(self) -> np.ndarray:
        return np.array([e[1] for e in self.exponents], dtype=int)

    @property
    def p(self) -> np.ndarray:
        return np.array([e[0] for e in self.exponents], dtype=int)


def basis(X: WeightedProjectiveLine, k: int) -> MonomialBasis:
    if k < 0:
        raise ValueError("degree must be non-negative")
    pairs = tuple(((k - X.b * q) // X.a, q) for q in range(k // X.b + 1) if (k - X.b * q) % X.a == 0)
    return MonomialBasis(k, pairs)


def h0(X: WeightedProjectiveLine, k: int) -> int:
    return len(basis(X, k))


# ---------------------------------------------------------------------------
# CP^1 chart metrics


@dataclass(frozen=True)
class ChartMetric:
    """Metric h = exp(-phi) on O(1) over CP^1, phi = log(1+|z|^2) + eps*Y."""

    eps: float = 0.0
    kind: str = "fs"  # fs | radial | nonradial
    d: int = 1

    orbifold = WeightedProjectiveLine(1, 1)
    volume = 1.0

    def __post_init__(self):
        if self.kind not in ("fs", "radial", "nonradial"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "nonradial" and self.d < 1:
            raise ValueError("harmonic degree must be >= 1")
        # sup of |a (Y - mean Y)| over the sphere bounds the density ratio
        bound = {"fs": 0.0, "radial": 1.0, "nonradial": self.d * (self.d + 1) / 2.0**self.d}[self.kind]
        if self.eps * bound >= 1.0 or (self.kind == "radial" and self.eps <= -2.0):
            raise NonKahlerError(f"amplitude {self.eps} destroys positivity of the curvature")

    @property
    def radial(self) -> bool:
        return self.kind != "nonradial"

    @property
    def ell(self) -> int:
        return 2 if self.kind == "radial" else self.d

    # -- harmonic Y with ddbar Y = -ell(ell+1) lam_fs (Y - Ybar)
    def _Y(self, z):
        r2 = np.abs(z) ** 2
        if self.kind == "radial":
            s = r2 / (1.0 + r2)
            return s * (1.0 - s)
        if self.kind == "nonradial":
            return np.real(z**self.d) / (1.0 + r2) ** self.d
        return np.zeros_like(r2)

    def _Ybar(self):
        return 1.0 / 6.0 if self.kind == "radial" else 0.0

    def _dY2_over_lamfs(self, z):
        """|dY/dz|^2 / lam_fs."""
        r2 = np.abs(z) ** 2
        if self.kind == "radial":
            s = r2 / (1.0 + r2)
            return (1.0 - 2.0 * s) ** 2 * s * (1.0 - s)
        if self.kind == "nonradial":
            d = self.d
            u = 1.0 + r2
            return 0.25 * d * d * np.abs(z ** (d - 1) - np.conj(z) ** (d + 1)) ** 2 / u ** (2 * d)
        return np.zeros_like(r2)

    def phi(self, z):
        z = np.asarray(z, dtype=complex)
        return np.log1p(np.abs(z) ** 2) + self.eps * self._Y(z)

    def density_ratio(self, z):
        """lam / lam_fs, chart independent."""
        a = -self.ell * (self.ell + 1)
        return 1.0 + self.eps * a * (self._Y(z) - self._Ybar())

    def curvature_density(self, z):
        """ddbar(phi) in the affine chart."""
        z = np.asarray(z, dtype=complex)
        g = self.density_ratio(z)
        if np.any(g <= 0):
            raise NonKahlerError("negative curvature density")
        return g / (1.0 + np.abs(z) ** 2) ** 2

    def scal(self, z):
        """Scalar curvature normalized so that the round unit-area sphere gives 2."""
        z = np.asarray(z, dtype=complex)
        a = -self.ell * (self.ell + 1)
        g = self.density_ratio(z)
        dY = self._Y(z) - self._Ybar()
        ddlog_g = self.eps * a * a * dY / g - (self.eps * a) ** 2 * self._dY2_over_lamfs(z) / g**2
        return (2.0 - ddlog_g) / g

    def potential(self) -> ChartFunction:
        return ChartFunction(self.phi, radial=self.radial)

    # -- quadrature and sections
    def quadrature(self, rule: QuadratureRule):
        z, s, w = rule.nodes(radial=self.radial)
        return z, w * self.density_ratio(z)

    def section_values(self, d: int, z):
        """Columns z^j e^{-d phi / 2}, j = 0..d, so |col|^2 = |z^j|^2_{h^d}."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        r2 = np.abs(z) ** 2
        s = r2 / (1.0 + r2)
        j = np.arange(d + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.where(j[None, :] == 0, 0.0, j[None, :] * np.log(s)[:, None])
            logmod = 0.5 * (logs + (d - j)[None, :] * np.log1p(-s)[:, None])
        phase = np.exp(1j * j[None, :] * np.angle(z)[:, None])
        return np.exp(logmod - 0.5 * d * self.eps * self._Y(z)[:, None]) * phase

    def relative_ddbar(self, F, z, step: float = 1e-3):
        """ddbar(F) / lam for a function F on CP^1 given on chart points.

        Uses the chart z for |z| <= 1 and u = 1/z beyond, where
        lam_u = lam |z|^4.
        """
        from .calculus import ddbar

        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape)
        near = np.abs(z) <= 1.0
        if near.any():
            out[near] = ddbar(F, z[near], step) / self.curvature_density(z[near])
        if (~near).any():
            u = 1.0 / z[~near]
            Fu = lambda v: F(1.0 / v)
            out[~near] = ddbar(Fu, u, step) / (self.curvature_density(z[~near]) * np.abs(z[~near]) ** 4)
        return out

    def cone_t(self, w):
        """Cone coordinate |v|_{h*} at w in C^2 minus 0 (shape (..., 2) complex).

        Both harmonics satisfy Y(1/u) = Y(u), so the potential in the chart
        u = w0/w1 is phi itself and t^2 = |w1|^2 exp(phi(w0/w1)).
        """
        w = np.asarray(w, dtype=complex)
        w0, w1 = w[..., 0], w[..., 1]
        use0 = np.abs(w0) >= np.abs(w1)
        big = np.where(use0, w0, w1)
        small = np.where(use0, w1, w0)
        return np.abs(big) * np.exp(0.5 * self.phi(small / big))

    reeb_weights = (1.0, 1.0)

    def base_point(self, w):
        """Chart coordinate z = w1 / w0 of the cone point w."""
        w = np.asarray(w, dtype=complex)
        return w[..., 1] / w[..., 0]

    def lift(self, z, angle=0.0):
        """Cone point with t = 1 above chart point z."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        w0 = np.exp(-0.5 * self.phi(z)) * np.exp(1j * np.asarray(angle))
        return np.stack([w0, w0 * z], axis=-1)

    def sample_grid(self, n: int, seed: int = 0, s_range=(0.01, 0.99)):
        lo, hi = s_range
        if self.radial:
            s = lo + (hi - lo) * halton(n, 1, seed, jitter=1e-3 if seed else 0.0)[:, 0]
            return np.sqrt(s / (1 - s)).astype(complex)
        pts = halton(n, 2, seed, jitter=1e-3 if seed else 0.0)
        s = lo + (hi - lo) * pts[:, 0]
        return np.sqrt(s / (1 - s)) * np.exp(2j * np.pi * pts[:, 1])


# ---------------------------------------------------------------------------
# torus-invariant metrics on CP(a, b)


def reference_profile(X: WeightedProjectiveLine) -> Polynomial:
    """Profile of the metric induced from the weighted sphere with Reeb R_(a,b)."""
    a, b = X.a, X.b
    x = Polynomial([0.0, 1.0])
    return x * (1 - x) * (b * (1 - x) + a * x) / b**2


def bump_profile() -> Polynomial:
    """x^2 (1-x)^2: vanishes with its derivative at both ends."""
    x = Polynomial([0.0, 1.0])
    return x**2 * (1 - x) ** 2


_GL_CUM = 48


class ToricMetric:
    """Torus-invariant metric on O(1) over CP(a, b) from a profile Psi(x).

    x in [0, 1] is the normalized moment coordinate; on the slice z0 = 1 with
    rho = log|z1|^2 one has d rho / dx = 1 / (b Psi) and the chart potential
    satisfies d phi / dx = x / (b^2 Psi).

    With eps = 0 the cone coordinate is the implicit solution of
    c0 |z0|^2 t^(-2a) + c1 |z1|^2 t^(-2b) = 1, where (c0, c1) = ``cone_coeffs``.
    The coefficients only shift rho and phi by constants; the default (1, 1)
    gives the type-I deformation of the round sphere with Reeb weights (a, b).
    """

    radial = True

    def __init__(
        self,
        X: WeightedProjectiveLine,
        eps: float = 0.0,
        profile: Polynomial | None = None,
        cone_coeffs: tuple[float, float] = (1.0, 1.0),
    ):
        self.orbifold = X
        self.eps = float(eps)
        c0, c1 = cone_coeffs
        if c0 <= 0 or c1 <= 0:
            raise ValueError("cone coefficients must be positive")
        self.cone_coeffs = (float(c0), float(c1))
        a, b = X.a, X.b
        self._rho_shift = math.log(a / b) - math.log(c1) + (b / a) * math.log(c0)
        self._phi_shift = math.log(c0) / a
        self.profile = reference_profile(X) + self.eps * (bump_profile() if profile is None else profile)
        self._check()

    def __repr__(self):
        return f"ToricMetric({self.orbifold}, eps={self.eps})"

    @property
    def volume(self) -> float:
        return self.orbifold.volume

    def _check(self):
        a, b = self.orbifold.a, self.orbifold.b
        P, dP = self.profile, self.profile.deriv()
        ok = (
            abs(P(0.0)) < 1e-12
            and abs(P(1.0)) < 1e-12
            and abs(dP(0.0) - 1.0 / b) < 1e-12
            and abs(dP(1.0) + a / b**2) < 1e-12
        )
        if not ok:
            raise ValueError("profile violates the orbifold boundary conditions")
        xs = np.linspace(0, 1, 2001)[1:-1]
        if np.any(P(xs) <= 0):
            raise NonKahlerError("profile not positive: curvature density vanishes")

    # -- primitives
    def _R(self, x):
        a, b = self.orbifold.a, self.orbifold.b
        return 1.0 / (b * self.profile(x)) - 1.0 / x - (b / a) / (1.0 - x)

    def _Q(self, x):
        a, b = self.orbifold.a, self.orbifold.b
        return x / (b * b * self.profile(x)) - 1.0 / (a * (1.0 - x))

    def _cumulative(self, fn, x):
        x = np.asarray(x, dtype=float)
        t, w = gauss_legendre(_GL_CUM)
        nodes = x[..., None] * t
        return np.sum(fn(nodes) * w, axis=-1) * x

    def rho(self, x):
        a, b = self.orbifold.a, self.orbifold.b
        x = np.asarray(x, dtype=float)
        return np.log(x) - (b / a) * np.log1p(-x) + self._cumulative(self._R, x) + self._rho_shift

    def phi_of_x(self, x):
        a = self.orbifold.a
        x = np.asarray(x, dtype=float)
        return -np.log1p(-x) / a + self._cumulative(self._Q, x) + self._phi_shift

    def x_of_rho(self, rho, tol: float = 1e-14, maxiter: int = 60):
        """Invert rho(x) by Newton in the logit variable (rho is monotone)."""
        a, b = self.orbifold.a, self.orbifold.b
        rho = np.asarray(rho, dtype=float)
        ell = rho - self._rho_shift
        ell = np.where(ell < 0, ell, ell * a / b)
        for _ in range(maxiter):
            x = 1.0 / (1.0 + np.exp(-ell))
            x = np.clip(x, 1e-300, 1 - 1e-16)
            r = self.rho(x) - rho
            theta = self.profile(x) / (x * (1 - x))
            step = r * b * theta
            ell = ell - np.clip(step, -5.0, 5.0)
            if np.all(np.abs(step) < tol * np.maximum(1.0, np.abs(ell))):
                break
        return 1.0 / (1.0 + np.exp(-ell))

    def scal(self, x):
        """Scalar curvature normalized so that unit-area round CP^1 gives 2."""
        b = self.orbifold.b
        return -(b**2) * self.profile.deriv(2)(np.asarray(x, dtype=float))

    def curvature_density(self, z):
        """ddbar(phi) on the slice z0 = 1 at chart coordinate z = z1."""
        rho = np.log(np.abs(np.asarray(z, dtype=complex)) ** 2)
        x = self.x_of_rho(rho)
        return self.profile(x) * np.exp(-rho)

    def potential(self) -> ChartFunction:
        return ChartFunction(lambda z: self.phi_of_x(self.x_of_rho(np.log(np.abs(z) ** 2))), radial=True)

    def quadrature(self, rule: QuadratureRule):
        x, w = gauss_legendre(rule.n_r)
        return x, w * self.volume

    def section_values(self, d: int, x):
        """|sigma|_{h^d} for the monomial basis of degree d (real, by increasing q)."""
        B = basis(self.orbifold, d)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if len(B) == 0:
            return np.zeros((x.size, 0))
        Rint = self._cumulative(self._R, x)
        Fint = self._cumulative(self._Q, x)
        q, p = B.q, B.p
        with np.errstate(divide="ignore"):
            lx, l1x = np.log(x), np.log1p(-x)
        const = q * self._rho_shift - d * self._phi_shift
        logmod = q[None, :] * lx[:, None] + p[None, :] * l1x[:, None] + q[None, :] * Rint[:, None] - d * Fint[:, None]
        # x^0 at x = 0 must be 1, not nan
        logmod = np.where((q[None, :] == 0) & (x[:, None] == 0), -d * Fint[:, None] + p[None, :] * l1x[:, None], logmod)
        logmod = logmod + const[None, :]
        return np.exp(0.5 * logmod)

    def relative_ddbar(self, F, x, step: float = 1e-3):
        """ddbar(F)/lam = b^2 (Psi F')' for a torus-invariant F(x)."""
        b = self.orbifold.b
        x = np.atleast_1d(np.asarray(x, dtype=float))

        def flux(y, h):
            return self.profile(y) * (F(y + h) - F(y - h)) / (2 * h)

        def lap(h):
            return (flux(x + h, h) - flux(x - h, h)) / (2 * h)

        return b * b * (4.0 * lap(step / 2) - lap(step)) / 3.0

    def cone_t(self, w):
        """Cone coordinate at w in C^2 minus 0, homogeneous for the (a, b) action."""
        a, b = self.orbifold.a, self.orbifold.b
        w = np.asarray(w, dtype=complex)
        l0 = np.log(np.abs(w[..., 0]) ** 2)
        l1 = np.log(np.abs(w[..., 1]) ** 2)
        with np.errstate(invalid="ignore"):
            rho = l1 - (b / a) * l0
        rho = np.where(np.isnan(rho), 0.0, rho)
        x = self.x_of_rho(np.clip(rho, -700, 700))
        Rint = self._cumulative(self._R, x)
        Fint = self._cumulative(self._Q, x)
        # two algebraically equal forms, each stable on one side of x = 1/2
        log_t2_a = l0 / a - np.log1p(-x) / a + Fint + self._phi_shift
        log_t2_b = l1 / b - np.log(x) / b + Fint - (Rint + self._rho_shift) / b + self._phi_shift
        log_t2 = np.where(x < 0.5, log_t2_a, log_t2_b)
        return np.exp(0.5 * log_t2)

    @property
    def reeb_weights(self) -> tuple[float, float]:
        return (float(self.orbifold.a), float(self.orbifold.b))

    def base_point(self, w):
        """Moment coordinate x of the cone point w."""
        a, b = self.orbifold.a, self.orbifold.b
        w = np.asarray(w, dtype=complex)
        rho = np.log(np.abs(w[..., 1]) ** 2) - (b / a) * np.log(np.abs(w[..., 0]) ** 2)
        return self.x_of_rho(np.clip(rho, -700, 700))

    def lift(self, x, angle=0.0):
        """Cone point with t = 1 over moment coordinate x."""
        a, b = self.orbifold.a, self.orbifold.b
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lam = np.exp(-0.5 * self.phi_of_x(x))
        z1 = np.exp(0.5 * self.rho(x) + 1j * np.asarray(angle))
        return np.stack([lam**a + 0j, lam**b * z1], axis=-1)

    def sample_grid(self, n: int, seed: int = 0, x_range=(0.01, 0.99)):
        lo, hi = x_range
        return lo + (hi - lo) * halton(n, 1, seed, jitter=1e-3 if seed else 0.0)[:, 0]


def curvature_density(h, z):
    """ddbar of the chart potential of ``h``; raises if not positive."""
    lam = h.curvature_density(z)
    if np.any(np.asarray(lam) <= 0):
        raise NonKahlerError("non-positive curvature density: line bundle not ample for this metric")
    return lam


def orbifold_volume(h, rule: QuadratureRule = QuadratureRule()) -> float:
    """Integral of omega over X computed from the curvature density in the chart."""
    if isinstance(h, ChartMetric):
        dens = ChartFunction(lambda z: curvature_density(h, z) / np.pi, radial=h.radial)
        return integrate_chart(ChartFunction(lambda z: np.ones(z.shape), radial=True), dens, rule)
    # toric: (1/a) * int over the slice of lam/pi dx dy = (1/a) int lam(rho) e^rho d rho
    a, b = h.orbifold.a, h.orbifold.b
    lo, hi = -32.0 + h._rho_shift, 30.0 * b / a + h._rho_shift
    r, w = gauss_legendre(2 * rule.n_r, lo, hi)
    lam = curvature_density(h, np.exp(0.5 * r))
    return float(np.sum(lam * np.exp(r) * w) / a)
