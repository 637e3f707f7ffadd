"""Lift of the Bergman embedding to the cone and the induced Sasakian structures.

A cone point w in C^2 maps to the graded vector whose degree-(k+i) block
holds the Hilb-orthonormal sections evaluated at w.  The weighted sphere of
the target pulls back to the cone coordinate t_k(w) = 1 / lambda(v), where
lambda solves sum_d d lambda^(2d) |v_d|^2 = c.  The corrected coordinate
t'_k = t_k exp(f / 2c), f = sum_d lambda^(2d) |v_d|^2, belongs to the metric
h' whose curvature is the pulled-back Fubini-Study form.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bergman import BergmanFamily, NumericalFailure
from .orbifold import ToricMetric, WeightedProjectiveLine, basis
from .pullback import solve_alpha_from_kernels
from .sasaki import (
    FunctionCone,
    PowerCone,
    SasakianFrame,
    SasakianStructure,
    WeightedCone,
    positive_convergents,
    sphere_points,
    structure_distance,
    to_complex,
    type_i_deform,
    standard_structure,
)


@dataclass(frozen=True)
class EmbeddingVector:
    k: int
    degrees: tuple[int, ...]
    blocks: tuple[np.ndarray, ...]  # each (npts, h0(degree))

    def block_norms(self) -> np.ndarray:
        """|v_d|^2 per degree, shape (len(degrees), npts)."""
        return np.array([np.sum(np.abs(b) ** 2, axis=1) for b in self.blocks])

    @property
    def dimension(self) -> int:
        return sum(b.shape[1] for b in self.blocks)


def _monomials(X: WeightedProjectiveLine, degree: int, w) -> np.ndarray:
    B = basis(X, degree)
    w = np.atleast_2d(np.asarray(w, dtype=complex))
    return w[:, 0:1] ** B.p[None, :] * w[:, 1:2] ** B.q[None, :]


def cone_embed(family: BergmanFamily, k: int, w) -> EmbeddingVector:
    """Orthonormal sections of every degree k + i evaluated at cone points ``w``."""
    X = family.metric.orbifold
    blocks, degs = [], []
    for _, d, c in family.degrees(k):
        if len(basis(X, d)) == 0:
            continue
        on = family.orthonormal_basis(d)
        blocks.append(np.sqrt(c) * (_monomials(X, d, w) @ on.coefficients))
        degs.append(d)
    v = EmbeddingVector(k, tuple(degs), tuple(blocks))
    if np.any(np.sum(v.block_norms(), axis=0) == 0):
        raise NumericalFailure(f"embedding vector vanishes; k = {k} below the stable range")
    return v


def lambda_solve(v: EmbeddingVector, c: float) -> np.ndarray:
    """Positive root of sum_d d lambda^(2d) |v_d|^2 = c."""
    ds = np.array(v.degrees, dtype=float)
    return np.sqrt(solve_alpha_from_kernels(ds, v.block_norms(), c))


def induced_coordinate(family: BergmanFamily, k: int, w, corrected: bool = False) -> np.ndarray:
    """t_k(w) = 1 / lambda, or t'_k = t_k exp(f / 2c) when ``corrected``."""
    v = cone_embed(family, k, w)
    c = family.c_constant(k)
    lam = lambda_solve(v, c)
    t = 1.0 / lam
    if corrected:
        ds = np.array(v.degrees, dtype=float)
        f = np.sum(lam[None, :] ** (2 * ds[:, None]) * v.block_norms(), axis=0)
        t = t * np.exp(f / (2.0 * c))
    return t


def induced_cone(family: BergmanFamily, k: int, corrected: bool = True, step: float = 1e-3) -> FunctionCone:
    def log_t(x):
        return np.log(induced_coordinate(family, k, to_complex(x), corrected))

    return FunctionCone(log_t, family.metric.reeb_weights, step)


def original_cone(metric, step: float = 1e-3) -> FunctionCone:
    return FunctionCone(lambda x: np.log(metric.cone_t(to_complex(x))), metric.reeb_weights, step)


@dataclass
class InducedReport:
    ks: list[int]
    distances: list[float]
    sup_t: list[float]
    sup_t_corrected: list[float]


def induced_structure(family: BergmanFamily, k: int, points, reference: SasakianFrame | None = None, corrected: bool = True):
    """Frame of the structure induced by t'_k at ``points`` and its distance to the original."""
    if reference is None:
        reference = SasakianStructure(original_cone(family.metric)).frame(points)
    F = SasakianStructure(induced_cone(family, k, corrected)).frame(points, reference.tangent)
    return F, structure_distance(F, reference, include_phi=False)


def induced_report(family: BergmanFamily, ks, n_points: int = 100, seed: int = 0) -> InducedReport:
    """D_k = max(|eta_k - eta|, |g_k - g|) on {t = 1} over a quasi-random grid."""
    cone = original_cone(family.metric)
    pts = cone.project(sphere_points(n_points, 4, seed))
    ref = SasakianStructure(cone).frame(pts)
    w = to_complex(pts)
    dist, st, stc = [], [], []
    for k in ks:
        dist.append(induced_structure(family, k, pts, ref)[1])
        st.append(float(np.max(np.abs(induced_coordinate(family, k, w) - 1.0))))
        stc.append(float(np.max(np.abs(induced_coordinate(family, k, w, True) - 1.0))))
    return InducedReport([int(k) for k in ks], dist, st, stc)


# ---------------------------------------------------------------------------
# quasi-regular diagonal


@dataclass
class DiagonalRow:
    j: int
    convergent: Fraction
    orbifold: WeightedProjectiveLine
    k: int
    approximation: float  # d_j: quasi-regular vs irregular target
    induced: float  # D_{j,k}: induced vs quasi-regular
    combined: float  # induced vs irregular target


def quasi_regular_family(convergent: Fraction, p: int = 2, eps: float = 0.0, rule=None) -> BergmanFamily:
    """Polarized CP(q, p) whose weighted-cone coordinate is tau = t^(1/q) for Reeb (1, p/q)."""
    X = WeightedProjectiveLine(convergent.denominator, convergent.numerator)
    metric = ToricMetric(X, eps, cone_coeffs=(1.0, 1.0))
    return BergmanFamily(metric, p) if rule is None else BergmanFamily(metric, p, rule)


def quasi_regular_diagonal(rho, J: int, ks, n_points: int = 100, seed: int = 0, p: int = 2) -> list[DiagonalRow]:
    """Induced structures of the j-th quasi-regular approximation at k = ks[j-1].

    All structures are type-I deformations of the round S^3, so they are
    compared on the same sample of S^3.
    """
    if len(ks) < J:
        raise ValueError("need one k per diagonal step")
    base = standard_structure()
    pts = sphere_points(n_points, 4, seed)
    target = type_i_deform(base, (1.0, float(rho)), pts).frame(pts)
    rows = []
    for j, conv in enumerate(positive_convergents(rho, J), start=1):
        q = conv.denominator
        quasi = SasakianStructure(WeightedCone((1.0, float(conv)), (1.0, 1.0))).frame(pts, target.tangent)
        fam = quasi_regular_family(conv, p)
        k = int(ks[j - 1])
        # tau'_k approximates t^(1/q); t_k = tau'_k^q has Reeb (1, p/q)
        cone = PowerCone(induced_cone(fam, k), q)
        F = SasakianStructure(cone).frame(pts, target.tangent)
        rows.append(
            DiagonalRow(
                j,
                conv,
                fam.metric.orbifold,
                k,
                structure_distance(quasi, target),
                structure_distance(F, quasi),
                structure_distance(F, target),
            )
        )
    return rows
