"""Sasakian structures on {t = 1} from cone coordinates on C^(n+1).

Everything is expressed in the real coordinates (x0, y0, x1, y1, ...) of
C^(n+1) with J dx = dy.  For s = log t with gradient G and Hessian H,

    eta = J G,   d eta = -(H J + J H),

the transverse form (i/2) ddbar log t^2 is J^T (H + J^T H J) / 2 and the cone
metric is the J-invariant part of Hess(t^2) / 2.  Frames take d eta from
finite differences of eta, so 1/2 d eta = (i/2) ddbar log t^2 is checked
numerically rather than holding by algebra.  Tensors are restricted to TM
through an orthonormal tangent frame whose last 2n columns span the contact
distribution D = ker eta.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.special import ndtri

from .calculus import halton


class PositivityError(ValueError):
    """eta(R') <= 0 somewhere, or a nonpositive weight."""


def complex_structure(dim: int) -> np.ndarray:
    J = np.zeros((dim, dim))
    for j in range(0, dim, 2):
        J[j + 1, j] = 1.0
        J[j, j + 1] = -1.0
    return J


def to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def _real_weights(w) -> np.ndarray:
    return np.repeat(np.asarray(w, dtype=float), 2)


def reeb_field(w, x) -> np.ndarray:
    """R_w = sum_j w_j i (z_j d/dz_j - conj), i.e. the rotation z_j -> e^(i w_j s) z_j."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    J = complex_structure(x.shape[-1])
    return (x * _real_weights(w)) @ J.T


# ---------------------------------------------------------------------------
# cone coordinates


class ConeCoordinate:
    """Cone coordinate t on C^(n+1) minus 0, homogeneous for the flow of weights."""

    weights: np.ndarray
    dim: int

    def log_t(self, x) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z):
        return np.exp(self.log_t(to_real(z)))

    def derivatives(self, x):
        """(log t, gradient, Hessian) of log t at real points x, shape (N, dim)."""
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        return self.derivatives(x)[1]

    def eta(self, x) -> np.ndarray:
        """Contact form d^c log t = J grad(log t) as a covector field."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.gradient(x) @ complex_structure(x.shape[1]).T

    def exterior_eta(self, x, step: float = 1e-4) -> np.ndarray:
        """d eta by central differences of eta with one Richardson level."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n, d = x.shape

        def jac(h):
            E = np.eye(d) * h
            return np.stack([(self.eta(x + E[a]) - self.eta(x - E[a])) / (2 * h) for a in range(d)], axis=1)

        D = (4 * jac(step / 2) - jac(step)) / 3  # D[n, a, b] = d_a eta_b
        return D - np.swapaxes(D, 1, 2)

    def project(self, x) -> np.ndarray:
        """Move x along the real weighted flow onto {t = 1}."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = self.log_t(x)
        return x * np.exp(-s[:, None] * _real_weights(self.weights)[None, :])


class WeightedCone(ConeCoordinate):
    """t solving sum_j c_j |z_j|^2 t^(-2 w_j) = 1, with closed-form derivatives.

    With c = w, {t = 1} is the ellipsoid sum w_j |z_j|^2 = 1 and t agrees
    there with (sum w_j |z_j|^2)^(1/2); with c = 1, {t = 1} is the round
    sphere and the structure is the type-I deformation of the standard one.
    """

    def __init__(self, weights, coeffs=None):
        w = np.asarray(weights, dtype=float)
        if np.any(~(w > 0)):
            raise PositivityError(f"weights must be positive, got {tuple(w)}")
        self.weights = w
        self.coeffs = w.copy() if coeffs is None else np.asarray(coeffs, dtype=float)
        if self.coeffs.shape != w.shape or np.any(self.coeffs <= 0):
            raise ValueError("coefficients must be positive and match the weights")
        self.dim = 2 * len(w)

    def __repr__(self):
        return f"WeightedCone(weights={tuple(self.weights)}, coeffs={tuple(self.coeffs)})"

    def log_t(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        rho = self.coeffs * (x[:, 0::2] ** 2 + x[:, 1::2] ** 2)
        if np.any(np.sum(rho, axis=1) == 0):
            raise ValueError("cone coordinate undefined at the origin")
        w = self.weights
        with np.errstate(divide="ignore"):
            s = np.max(np.where(rho > 0, 0.5 * np.log(rho) / w, -np.inf), axis=1)
        # G(s) = sum rho e^{-2ws} - 1 is convex decreasing and G(s0) >= 0
        for _ in range(100):
            e = rho * np.exp(-2.0 * w * s[:, None])
            G = e.sum(axis=1) - 1.0
            ds = G / (2.0 * (w * e).sum(axis=1))
            s = s + ds
            if np.all(np.abs(ds) < 1e-16 * np.maximum(1.0, np.abs(s))):
                break
        return s

    def gradient(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = self.log_t(x)
        a = _real_weights(self.coeffs)[None, :] * np.exp(-2.0 * _real_weights(self.weights)[None, :] * s[:, None])
        q = a * x
        return q / np.sum(_real_weights(self.weights) * q * x, axis=1)[:, None]

    def derivatives(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s = self.log_t(x)
        wr = _real_weights(self.weights)
        a = _real_weights(self.coeffs)[None, :] * np.exp(-2.0 * wr[None, :] * s[:, None])
        q = a * x
        W = np.sum(wr * q * x, axis=1)  # sum_j w_j a_j |z_j|^2
        grad = q / W[:, None]
        # d q_m / d x_l = a_m delta_ml - 2 w_m a_m x_m grad_l
        dq = a[:, :, None] * np.eye(self.dim)[None] - 2.0 * (wr * q)[:, :, None] * grad[:, None, :]
        W2 = np.sum(wr**2 * q * x, axis=1)
        dW = -2.0 * W2[:, None] * grad + 2.0 * wr * q
        hess = dq / W[:, None, None] - q[:, :, None] * dW[:, None, :] / W[:, None, None] ** 2
        return s, grad, 0.5 * (hess + np.swapaxes(hess, 1, 2))


class PowerCone(ConeCoordinate):
    """t^a; its Reeb field is R / a."""

    def __init__(self, base: ConeCoordinate, a: float):
        if not a > 0:
            raise PositivityError("D-homothety factor must be positive")
        self.base, self.a = base, float(a)
        self.weights = np.asarray(base.weights, dtype=float) / self.a
        self.dim = base.dim

    def log_t(self, x):
        return self.a * self.base.log_t(x)

    def derivatives(self, x):
        s, g, H = self.base.derivatives(x)
        return self.a * s, self.a * g, self.a * H

    def gradient(self, x):
        return self.a * self.base.gradient(x)


class FunctionCone(ConeCoordinate):
    """Cone coordinate given by a black-box log t; derivatives by finite differences.

    Central differences at steps h and h/2 combined by one Richardson level,
    so the Hessian error is O(h^4) plus roundoff eps / h^2.
    """

    def __init__(self, log_t: Callable[[np.ndarray], np.ndarray], weights, step: float = 1e-3):
        self._log_t = log_t
        self.weights = np.asarray(weights, dtype=float)
        self.dim = 2 * len(self.weights)
        self.step = step

    def log_t(self, x):
        return np.asarray(self._log_t(np.atleast_2d(np.asarray(x, dtype=float))), dtype=float)

    def _fd(self, x, h):
        n, d = x.shape
        E = np.eye(d) * h
        f0 = self.log_t(x)
        fp = np.stack([self.log_t(x + E[i]) for i in range(d)], axis=1)
        fm = np.stack([self.log_t(x - E[i]) for i in range(d)], axis=1)
        grad = (fp - fm) / (2 * h)
        H = np.empty((n, d, d))
        for i in range(d):
            H[:, i, i] = (fp[:, i] - 2 * f0 + fm[:, i]) / h**2
            for j in range(i + 1, d):
                v = (
                    self.log_t(x + E[i] + E[j])
                    - self.log_t(x + E[i] - E[j])
                    - self.log_t(x - E[i] + E[j])
                    + self.log_t(x - E[i] - E[j])
                ) / (4 * h * h)
                H[:, i, j] = H[:, j, i] = v
        return f0, grad, H

    def derivatives(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        s, g1, H1 = self._fd(x, self.step)
        _, g2, H2 = self._fd(x, self.step / 2)
        return s, (4 * g2 - g1) / 3, (4 * H2 - H1) / 3


# ---------------------------------------------------------------------------
# frames: all tensors at a set of points


@dataclass(frozen=True)
class SasakianFrame:
    """Structure tensors at ``points``, ambient (N, dim[, dim]) arrays.

    ``tangent`` is an orthonormal frame of TM; column 0 is along the Reeb
    direction of the reference cone and the rest span D.  ``levi`` and
    ``cone_metric`` come from the cone coordinate and are None for
    structures defined only by formulas.
    """

    points: np.ndarray
    tangent: np.ndarray
    eta: np.ndarray
    deta: np.ndarray
    reeb: np.ndarray
    phi: np.ndarray
    metric: np.ndarray
    levi: np.ndarray | None = None

    def restrict(self):
        T = self.tangent
        Tt = np.swapaxes(T, 1, 2)
        return (
            np.einsum("na,nai->ni", self.eta, T),
            Tt @ self.metric @ T,
            Tt @ self.phi @ T,
        )


def tangent_frame(grad) -> np.ndarray:
    """Orthonormal basis of grad^perp, first column J n, then the complement of {n, J n}."""
    grad = np.atleast_2d(grad)
    n_pts, d = grad.shape
    J = complex_structure(d)
    n = grad / np.linalg.norm(grad, axis=1, keepdims=True)
    A = np.concatenate([n[:, :, None], (n @ J.T)[:, :, None], np.broadcast_to(np.eye(d), (n_pts, d, d))], axis=2)
    Q, _ = np.linalg.qr(A)
    T = Q[:, :, 1:d].copy()
    # fix signs so that the first column is exactly J n
    sign = np.sign(np.einsum("na,na->n", T[:, :, 0], n @ J.T))
    T[:, :, 0] *= sign[:, None]
    return T


def _transverse_form(HF, J):
    """(i/2) ddbar F as a matrix of the 2-form, from the real Hessian of F."""
    return J.T @ (0.25 * (HF + J.T @ HF @ J))


class SasakianStructure:
    """Structure (eta, R, Phi, g) induced on {t = 1} by a cone coordinate."""

    def __init__(self, cone: ConeCoordinate):
        self.cone = cone

    @property
    def weights(self):
        return self.cone.weights

    def sample(self, n: int, seed: int = 0) -> np.ndarray:
        """Quasi-random points on {t = 1} (Halton on S^3, then the weighted flow)."""
        return self.cone.project(sphere_points(n, self.cone.dim, seed))

    def frame(self, points, tangent: np.ndarray | None = None) -> SasakianFrame:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        d = x.shape[1]
        J = complex_structure(d)
        s, G, H = self.cone.derivatives(x)
        eta = G @ J.T
        deta = self.cone.exterior_eta(x)
        R = reeb_field(self.weights, x)
        if tangent is None:
            tangent = tangent_frame(G)
        P = tangent @ np.swapaxes(tangent, 1, 2)
        I = np.eye(d)[None]
        phi = J[None] @ (I - R[:, :, None] * eta[:, None, :]) @ P
        # cone metric: J-invariant part of Hess(t^2)/2, t^2 = e^{2s}
        Ht2 = np.exp(2 * s)[:, None, None] * (2 * H + 4 * G[:, :, None] * G[:, None, :])
        metric = 0.25 * (Ht2 + J.T[None] @ Ht2 @ J[None]) / np.exp(2 * s)[:, None, None]
        levi = _transverse_form(2 * H, J)
        return SasakianFrame(x, tangent, eta, deta, R, phi, metric, levi)


def standard_structure(dim: int = 4) -> SasakianStructure:
    return SasakianStructure(WeightedCone(np.ones(dim // 2), np.ones(dim // 2)))


def weighted_structure(w) -> SasakianStructure:
    """Weighted Sasaki sphere: Reeb R_w on the ellipsoid sum w_j |z_j|^2 = 1."""
    return SasakianStructure(WeightedCone(w))


# ---------------------------------------------------------------------------
# transformations of frames


def d_homothety_frame(F: SasakianFrame, a: float) -> SasakianFrame:
    """eta_a = a eta, R_a = R / a, Phi_a = Phi, g_a = a g + (a^2 - a) eta (x) eta."""
    if not a > 0:
        raise PositivityError("D-homothety factor must be positive")
    ee = F.eta[:, :, None] * F.eta[:, None, :]
    return replace(
        F,
        eta=a * F.eta,
        deta=a * F.deta,
        reeb=F.reeb / a,
        metric=a * F.metric + (a * a - a) * ee,
        levi=None if F.levi is None else a * F.levi,
    )


def d_homothety(S: SasakianStructure, a: float) -> SasakianStructure:
    """Cone-coordinate version: t -> t^a."""
    return SasakianStructure(PowerCone(S.cone, a))


def type_i_frame(S: SasakianStructure, w_new, points, tangent=None) -> SasakianFrame:
    """Type-I deformation with Reeb R' = R_{w'}:

    eta' = eta / eta(R'), Phi' = Phi - Phi R' (x) eta', g' = eta' (x) eta' + 1/2 d eta' (Id (x) Phi').
    """
    F = S.frame(points, tangent)
    x = F.points
    d = x.shape[1]
    _, G, H = S.cone.derivatives(x)
    Rp = reeb_field(w_new, x)
    h = np.einsum("na,na->n", F.eta, Rp)
    if np.any(h <= 0):
        raise PositivityError(f"eta(R') <= 0 at {int(np.sum(h <= 0))} sample points")
    Wr = _real_weights(w_new)
    dh = np.einsum("nab,nb->na", H, Wr * x) + Wr * G
    eta_p = F.eta / h[:, None]
    wedge = dh[:, :, None] * F.eta[:, None, :] - F.eta[:, :, None] * dh[:, None, :]
    deta_p = F.deta / h[:, None, None] - wedge / h[:, None, None] ** 2
    phiR = np.einsum("nab,nb->na", F.phi, Rp)
    P = F.tangent @ np.swapaxes(F.tangent, 1, 2)
    phi_p = F.phi - (phiR[:, :, None] * eta_p[:, None, :]) @ P
    metric_p = eta_p[:, :, None] * eta_p[:, None, :] + 0.5 * deta_p @ phi_p
    levi = None
    if isinstance(S.cone, WeightedCone):
        # the deformed cone coordinate is known in closed form
        Hp = WeightedCone(w_new, S.cone.coeffs).derivatives(x)[2]
        levi = _transverse_form(2 * Hp, complex_structure(d))
    return SasakianFrame(x, F.tangent, eta_p, deta_p, Rp, phi_p, metric_p, levi)


class TypeIDeformation:
    """Lazy type-I deformation of ``base`` with Reeb weights ``w_new``."""

    def __init__(self, base: SasakianStructure, w_new):
        self.base = base
        self.weights = np.asarray(w_new, dtype=float)

    def sample(self, n: int, seed: int = 0):
        return self.base.sample(n, seed)

    def frame(self, points, tangent=None) -> SasakianFrame:
        return type_i_frame(self.base, self.weights, points, tangent)

    def cone_structure(self) -> SasakianStructure:
        """Same deformation through its cone coordinate (weighted cones only)."""
        cone = self.base.cone
        if not isinstance(cone, WeightedCone):
            raise TypeError("cone form available for weighted cones only")
        return SasakianStructure(WeightedCone(self.weights, cone.coeffs))


def type_i_deform(S: SasakianStructure, w_new, check_points=None) -> TypeIDeformation:
    """Type-I deformation; positivity of eta(R') is checked on ``check_points``."""
    T = TypeIDeformation(S, w_new)
    pts = S.sample(256) if check_points is None else check_points
    F = S.frame(pts)
    h = np.einsum("na,na->n", F.eta, reeb_field(w_new, F.points))
    if np.any(h <= 0):
        raise PositivityError(f"eta(R') <= 0 at {int(np.sum(h <= 0))} sample points")
    return T


# ---------------------------------------------------------------------------
# axioms and distances

AXIOMS = ("A1_eta_R", "A2_deta_R", "A3_phi_squared", "A4_metric", "A5_transverse")


def check_sasakian_axioms(F: SasakianFrame) -> dict[str, np.ndarray]:
    """Per-point residuals of the five structure identities.

    A1 eta(R) = 1; A2 d eta(R, .) = 0 on TM; A3 Phi^2 = -Id + R (x) eta on TM;
    A4 g = 1/2 d eta (Id (x) Phi) + eta (x) eta on TM; A5 (i/2) ddbar log t^2
    equals 1/2 d eta on D (NaN when the frame has no cone coordinate).
    """
    T = F.tangent
    Tt = np.swapaxes(T, 1, 2)
    d = F.points.shape[1]
    I = np.eye(d)[None]
    a1 = np.abs(np.einsum("na,na->n", F.eta, F.reeb) - 1.0)
    a2 = np.max(np.abs(np.einsum("na,nab,nbi->ni", F.reeb, F.deta, T)), axis=1)
    RE = F.reeb[:, :, None] * F.eta[:, None, :]
    a3 = np.max(np.abs(Tt @ (F.phi @ F.phi + I - RE) @ T), axis=(1, 2))
    EE = F.eta[:, :, None] * F.eta[:, None, :]
    a4 = np.max(np.abs(Tt @ (F.metric - 0.5 * F.deta @ F.phi - EE) @ T), axis=(1, 2))
    if F.levi is None:
        a5 = np.full(len(a1), np.nan)
    else:
        D = T[:, :, 1:]
        a5 = np.max(np.abs(np.swapaxes(D, 1, 2) @ (F.levi - 0.5 * F.deta) @ D), axis=(1, 2))
    return dict(zip(AXIOMS, (a1, a2, a3, a4, a5)))


def structure_distance(F1: SasakianFrame, F2: SasakianFrame, include_phi: bool = True) -> float:
    """max over points of |eta1 - eta2|, ||g1 - g2|| and (optionally) ||Phi1 - Phi2||, restricted to TM."""
    e1, g1, p1 = F1.restrict()
    e2, g2, p2 = F2.restrict()
    parts = [np.max(np.linalg.norm(e1 - e2, axis=1)), np.max(np.linalg.norm(g1 - g2, ord=2, axis=(1, 2)))]
    if include_phi:
        parts.append(np.max(np.linalg.norm(p1 - p2, ord=2, axis=(1, 2))))
    return float(max(parts))


def sphere_points(n: int, dim: int = 4, seed: int = 0) -> np.ndarray:
    """Quasi-random points on the unit sphere of C^(dim/2) (uniform for dim = 4)."""
    if dim != 4:
        g = halton(n, dim, seed, jitter=1e-3 if seed else 0.0)
        x = ndtri(np.clip(g, 1e-12, 1 - 1e-12))
        return x / np.linalg.norm(x, axis=1, keepdims=True)
    u = halton(n, 3, seed, jitter=1e-3 if seed else 0.0)
    r0 = np.sqrt(u[:, 0])
    r1 = np.sqrt(1.0 - u[:, 0])
    a0, a1 = 2 * np.pi * u[:, 1], 2 * np.pi * u[:, 2]
    return np.stack([r0 * np.cos(a0), r0 * np.sin(a0), r1 * np.cos(a1), r1 * np.sin(a1)], axis=1)


# ---------------------------------------------------------------------------
# quasi-regular approximation


def convergents(rho, n: int) -> list[Fraction]:
    """First ``n`` continued-fraction convergents of rho (fewer if rho is rational)."""
    if n < 1:
        raise ValueError("need at least one convergent")
    x = Fraction(rho) if isinstance(rho, (int, Fraction)) else None
    xf = float(rho)
    out = []
    h0, h1, k0, k1 = 0, 1, 1, 0
    for _ in range(n):
        a = int(np.floor(x)) if x is not None else int(np.floor(xf))
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        out.append(Fraction(h1, k1))
        if x is not None:
            frac = x - a
            if frac == 0:
                break
            x = 1 / frac
        else:
            frac = xf - a
            if frac < 1e-12 * max(1.0, abs(xf)):
                break
            xf = 1.0 / frac
    return out


def positive_convergents(rho, n: int) -> list[Fraction]:
    """First ``n`` positive convergents; a zero convergent (rho < 1) is no valid Reeb weight."""
    return [c for c in convergents(rho, n + 1) if c > 0][:n]


@dataclass
class QuasiRegularTable:
    rho: float
    convergents: list[Fraction]
    distances: list[float]
    errors: list[float]

    @property
    def lipschitz(self) -> list[float]:
        return [d / e if e > 0 else float("nan") for d, e in zip(self.distances, self.errors)]


def quasi_regular_approx(rho, n: int, points=None, base: SasakianStructure | None = None) -> QuasiRegularTable:
    """Type-I deformations with Reeb (1, p_j/q_j) approaching (1, rho), and their distances."""
    base = standard_structure() if base is None else base
    pts = base.sample(1000) if points is None else points
    target = type_i_deform(base, (1.0, float(rho)), pts).frame(pts)
    cs = positive_convergents(rho, n)
    dist, err = [], []
    for c in cs:
        F = type_i_deform(base, (1.0, float(c)), pts).frame(pts, target.tangent)
        dist.append(structure_distance(F, target))
        err.append(abs(float(c) - float(rho)))
    return QuasiRegularTable(float(rho), cs, dist, err)
