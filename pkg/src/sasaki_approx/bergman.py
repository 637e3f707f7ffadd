"""Hilb Gram matrices, orthonormal section bases and weighted Bergman kernels.

For a polarized orbifold of order m and smoothing exponent p the weights
c_i are the coefficients of (1 + t + ... + t^(m-1))^p.  Degree k + i sections
carry the inner product

    <s, s'>_i = 1 / (c_i vol) * int_X conj(s) s' h^(k+i) omega,

and B_{k+i} is the Bergman density of that inner product.  The weighted
kernel is sum_i (k+i) B_{k+i}.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .calculus import QuadratureRule
from .orbifold import basis, h0


class IllConditionedGramError(ArithmeticError):
    """Cholesky factorization of a Gram matrix broke down."""


class NumericalFailure(ArithmeticError):
    """A quantity that must be positive definite or positive is not."""


@dataclass(frozen=True)
class WeightCoefficients:
    m: int
    p: int
    coeffs: tuple[int, ...]

    @property
    def indices(self) -> np.ndarray:
        return np.arange(len(self.coeffs))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=float)

    def __len__(self):
        return len(self.coeffs)


def weight_coeffs(m: int, p: int) -> WeightCoefficients:
    """Integer coefficients of (1 + t + ... + t^(m-1))^p, lowest degree first."""
    if m < 1 or p < 1:
        raise ValueError("need m >= 1 and p >= 1")
    out = [1]
    for _ in range(p):
        nxt = [0] * (len(out) + m - 1)
        for i, c in enumerate(out):
            for j in range(m):
                nxt[i + j] += c
        out = nxt
    return WeightCoefficients(m, p, tuple(out))


@dataclass(frozen=True)
class GramMatrix:
    degree: int
    matrix: np.ndarray
    diagonal: bool

    @property
    def smallest_eigenvalue(self) -> float:
        if self.diagonal:
            return float(np.min(np.real(np.diag(self.matrix))))
        return float(np.linalg.eigvalsh(self.matrix)[0])


def hilb_gram(metric, degree: int, weight: float = 1.0, rule: QuadratureRule = QuadratureRule()) -> GramMatrix:
    """Gram matrix of the monomial basis of degree ``degree`` for Hilb with weight c_i.

    Entry (a, b) is <s_a, s_b> with the first slot conjugated.  Torus
    invariant metrics give a diagonal matrix and only the diagonal is
    integrated.
    """
    if len(basis(metric.orbifold, degree)) == 0:
        raise ValueError(f"no sections in degree {degree}")
    pts, w = metric.quadrature(rule)
    V = metric.section_values(degree, pts)
    scale = 1.0 / (weight * metric.volume)
    if metric.radial:
        diag = scale * np.einsum("n,na->a", w, np.abs(V) ** 2)
        G = GramMatrix(degree, np.diag(diag), True)
    else:
        M = scale * (V.conj().T @ (w[:, None] * V))
        G = GramMatrix(degree, 0.5 * (M + M.conj().T), False)
    lo = G.smallest_eigenvalue
    if not lo > 0:
        raise NumericalFailure(f"Gram matrix of degree {degree} not positive definite (smallest eigenvalue {lo:.3e})")
    return G


def orthonormalize(G: GramMatrix | np.ndarray) -> np.ndarray:
    """Return R^{-1} where G = R^H R, so that monomials @ R^{-1} is orthonormal.

    The diagonal is scaled to one before factorizing, which keeps Gram
    matrices of monomials (whose diagonal spans many decades) well conditioned.
    """
    M = G.matrix if isinstance(G, GramMatrix) else np.asarray(G)
    d = np.sqrt(np.real(np.diag(M)))
    if isinstance(G, GramMatrix) and G.diagonal:
        return np.diag(1.0 / d)
    Ms = M / np.outer(d, d)
    try:
        L = np.linalg.cholesky(Ms)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedGramError(f"Cholesky breakdown, condition estimate {np.linalg.cond(Ms):.3e}") from exc
    # Ms = L L^H = R~^H R~ with R~ = L^H
    Rt_inv = solve_triangular(L.conj().T, np.eye(len(d)), lower=False)
    return Rt_inv / d[:, None]


def orthonormality_residual(G: GramMatrix | np.ndarray, Rinv: np.ndarray) -> float:
    M = G.matrix if isinstance(G, GramMatrix) else np.asarray(G)
    return float(np.max(np.abs(Rinv.conj().T @ M @ Rinv - np.eye(len(M)))))


@dataclass(frozen=True)
class OrthonormalBasis:
    """Hilb-orthonormal sections of one degree, for unit weight c_i = 1."""

    degree: int
    coefficients: np.ndarray  # R^{-1}; columns give orthonormal sections
    gram: GramMatrix

    def values(self, metric, pts, weight: float = 1.0) -> np.ndarray:
        """Pointwise h-values of the orthonormal sections, shape (npts, h0)."""
        V = metric.section_values(self.degree, pts)
        return np.sqrt(weight) * (V @ self.coefficients)

    def kernel(self, metric, pts, weight: float = 1.0) -> np.ndarray:
        V = metric.section_values(self.degree, pts)
        if self.gram.diagonal:
            inv = 1.0 / np.real(np.diag(self.gram.matrix))
            return weight * (np.abs(V) ** 2 @ inv)
        return weight * np.sum(np.abs(V @ self.coefficients) ** 2, axis=1)


class BergmanFamily:
    """Kernels of every degree for one metric, cached per degree.

    Changing c_i only rescales the Gram matrix, so a single unit-weight
    factorization per degree serves every k.
    """

    def __init__(self, metric, p: int = 2, rule: QuadratureRule = QuadratureRule()):
        self.metric = metric
        self.rule = rule
        self.weights = weight_coeffs(metric.orbifold.order, p)
        self._bases: dict[int, OrthonormalBasis] = {}

    @property
    def volume(self) -> float:
        return self.metric.volume

    def orthonormal_basis(self, degree: int) -> OrthonormalBasis:
        if degree not in self._bases:
            G = hilb_gram(self.metric, degree, 1.0, self.rule)
            self._bases[degree] = OrthonormalBasis(degree, orthonormalize(G), G)
        return self._bases[degree]

    def degrees(self, k: int) -> list[tuple[int, int, int]]:
        """(i, k + i, c_i) over the support of the weights."""
        if k < 1:
            raise ValueError("k must be positive")
        return [(i, k + i, c) for i, c in enumerate(self.weights.coeffs)]

    def kernel(self, degree: int, pts, weight: float = 1.0) -> np.ndarray:
        if h0(self.metric.orbifold, degree) == 0:
            return np.zeros(np.shape(np.atleast_1d(pts))[0])
        return self.orthonormal_basis(degree).kernel(self.metric, pts, weight)

    def kernels(self, k: int, pts) -> np.ndarray:
        """Array of B_{k+i}(x), shape (len(c), npts)."""
        return np.array([self.kernel(d, pts, c) for _, d, c in self.degrees(k)])

    def weighted_kernel(self, k: int, pts) -> np.ndarray:
        ds = np.array([d for _, d, _ in self.degrees(k)], dtype=float)
        return ds @ self.kernels(k, pts)

    def c_constant(self, k: int) -> float:
        return float(sum(c * d * h0(self.metric.orbifold, d) for _, d, c in self.degrees(k)))

    def trace(self, degree: int, weight: float = 1.0) -> float:
        """(1/(c vol)) int B omega, which equals h0 for an orthonormal basis."""
        pts, w = self.metric.quadrature(self.rule)
        return float(np.sum(w * self.kernel(degree, pts, weight)) / (weight * self.volume))


@dataclass(frozen=True)
class ExpansionFit:
    ks: tuple[int, ...]
    b0: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    condition: float


def expansion_fit(ks, values) -> ExpansionFit:
    """Pointwise least squares of B_k(x) against k^2, k, 1.

    ``values`` has shape (len(ks), npts).
    """
    ks = np.asarray(ks, dtype=float)
    if ks.size < 4 or ks.max() < 2 * ks.min():
        raise ValueError("expansion fit needs >= 4 k values spanning a factor >= 2; widen the k-range")
    # columns scaled to comparable size before solving
    A = np.stack([(ks / ks.max()) ** 2, ks / ks.max(), np.ones_like(ks)], axis=1)
    cond = float(np.linalg.cond(A))
    if cond > 1e8:
        raise ValueError(f"ill-conditioned fit (condition {cond:.2e}); widen the k-range")
    coef, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    s = ks.max()
    return ExpansionFit(tuple(int(k) for k in ks), coef[0] / s**2, coef[1] / s, coef[2], cond)


def expansion_formulas(family: BergmanFamily, pts, dim: int = 1):
    """Predicted (b0, b1(x)) from the volume, the weights and the scalar curvature."""
    c = family.weights.array
    i = family.weights.indices
    vol = family.volume
    b0 = vol * c.sum()
    scal = np.asarray(family.metric.scal(pts), dtype=float)
    b1 = vol * (np.sum(c * (dim + 1) * i) + c.sum() * scal / 2.0)
    return b0, b1
