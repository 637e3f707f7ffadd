"""Pullbacks of weighted Fubini-Study metrics through Bergman embeddings.

At a point x the ratio alpha_k = h_FS,k / h is the positive root of

    sum_i (k+i) alpha^(k+i) B_{k+i}(x) = c,

and f_k = sum_i alpha^(k+i) B_{k+i} is the squared norm of the embedding
vector in h_FS,k.  The metric whose curvature is the pulled-back
Fubini-Study form is h' = alpha exp(-f/c) h (checked against the Kähler
reduction of the weighted projective space in the test suite).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bergman import BergmanFamily, NumericalFailure
from .calculus import RateFit, loglog_slope


class SolverError(ArithmeticError):
    """The implicit equation for alpha could not be bracketed."""


def _degrees_and_kernels(family: BergmanFamily, k: int, pts):
    ds = np.array([d for _, d, _ in family.degrees(k)], dtype=float)
    return ds, family.kernels(k, pts)


def solve_alpha_from_kernels(ds, B, c: float, tol: float = 1e-12, bisect_tol: float = 1e-4, max_widen: int = 60):
    """Root of sum_i d_i alpha^d_i B_i = c for each column of ``B``.

    Bisection in log alpha on [log 0.5, log 2], widened geometrically until
    the sign changes, then Newton on log alpha, where the function is convex
    and increasing.
    """
    ds = np.asarray(ds, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if np.any(np.all(B <= 0, axis=0)):
        raise NumericalFailure("all Bergman kernels vanish at some point")

    def g(u):
        return np.sum(ds[:, None] * B * np.exp(ds[:, None] * u[None, :]), axis=0) - c

    n = B.shape[1]
    lo = np.full(n, math.log(0.5))
    hi = np.full(n, math.log(2.0))
    for _ in range(max_widen):
        bad_lo, bad_hi = g(lo) > 0, g(hi) < 0
        if not (bad_lo.any() or bad_hi.any()):
            break
        lo = np.where(bad_lo, 2.0 * lo, lo)
        hi = np.where(bad_hi, 2.0 * hi, hi)
    else:
        raise SolverError("no sign change after widening the bracket 60 times")
    while np.max(hi - lo) > bisect_tol:
        mid = 0.5 * (lo + hi)
        pos = g(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    u = 0.5 * (lo + hi)
    # polish to the last bit: callers difference alpha at small steps
    for _ in range(50):
        e = ds[:, None] * B * np.exp(ds[:, None] * u[None, :])
        r = np.sum(e, axis=0) - c
        du = r / np.sum(ds[:, None] * e, axis=0)
        u = u - du
        if np.all(np.abs(r) < tol * c) and np.all(np.abs(du) < 1e-15 * np.maximum(1.0, np.abs(u))):
            break
    alpha = np.exp(u)
    res = np.abs(np.sum(ds[:, None] * B * alpha[None, :] ** ds[:, None], axis=0) - c)
    if np.any(res > 10 * tol * c):
        raise SolverError(f"Newton polish stalled, relative residual {res.max() / c:.2e}")
    return alpha


def solve_alpha(family: BergmanFamily, k: int, pts, tol: float = 1e-12) -> np.ndarray:
    ds, B = _degrees_and_kernels(family, k, pts)
    return solve_alpha_from_kernels(ds, B, family.c_constant(k), tol)


def alpha_residual(family: BergmanFamily, k: int, pts, alpha) -> np.ndarray:
    ds, B = _degrees_and_kernels(family, k, pts)
    return np.sum(ds[:, None] * B * np.asarray(alpha)[None, :] ** ds[:, None], axis=0) - family.c_constant(k)


def correction_f(family: BergmanFamily, k: int, pts, alpha=None) -> np.ndarray:
    """f_k = vol sum_i c_i alpha^(k+i) |L^2-orthonormal sections|^2 = sum_i alpha^(k+i) B_{k+i}."""
    ds, B = _degrees_and_kernels(family, k, pts)
    if alpha is None:
        alpha = solve_alpha_from_kernels(ds, B, family.c_constant(k))
    return np.sum(B * np.asarray(alpha)[None, :] ** ds[:, None], axis=0)


def h_prime_ratio(family: BergmanFamily, k: int, pts) -> np.ndarray:
    """h'_FS,k / h = alpha_k exp(-f_k / c)."""
    ds, B = _degrees_and_kernels(family, k, pts)
    c = family.c_constant(k)
    alpha = solve_alpha_from_kernels(ds, B, c)
    f = np.sum(B * alpha[None, :] ** ds[:, None], axis=0)
    return alpha * np.exp(-f / c)


def omega_fs_k(family: BergmanFamily, k: int, pts, step: float = 1e-3) -> np.ndarray:
    """Density of the pulled-back Fubini-Study form relative to omega."""
    def log_ratio(q):
        return np.log(h_prime_ratio(family, k, np.atleast_1d(q)))

    dens = 1.0 - family.metric.relative_ddbar(log_ratio, pts, step)
    if np.any(dens <= 0):
        raise NumericalFailure(f"pulled-back form not positive at k={k}; k too small")
    return dens


def mean_scalar_curvature(family: BergmanFamily) -> float:
    pts, w = family.metric.quadrature(family.rule)
    return float(np.sum(w * family.metric.scal(pts)) / family.volume)


COLUMNS = ("sup_a1", "sup_a2", "sup_hprime", "sup_omega")

# below these values a column is noise: rounding for pointwise solves,
# finite-difference roundoff for the density column
FLOORS = {"sup_a1": 1e-13, "sup_a2": 1e-13, "sup_hprime": 1e-13, "sup_omega": 1e-8}


@dataclass
class ConvergenceReport:
    ks: list[int]
    rows: list[dict]
    fits: dict[str, RateFit | None]
    notes: dict[str, str] = field(default_factory=dict)
    failures: dict[int, str] = field(default_factory=dict)

    def slope(self, column: str) -> float | None:
        fit = self.fits.get(column)
        return None if fit is None else fit.slope

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("k",) + COLUMNS)
            for r in self.rows:
                w.writerow([r["k"]] + [repr(float(r[c])) for c in COLUMNS])

    def summary(self) -> dict:
        out = {}
        for col in COLUMNS:
            fit = self.fits[col]
            out[col] = (
                {"status": "floor", "note": self.notes.get(col, "")}
                if fit is None
                else {"slope": fit.slope, "intercept": fit.intercept, "residual": fit.residual, "ks": list(fit.ks), "note": self.notes.get(col, "")}
            )
        if self.failures:
            out["failures"] = {str(k): msg for k, msg in sorted(self.failures.items())}
        return out

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def convergence_row(family: BergmanFamily, k: int, pts, step: float = 1e-3, scal=None, sbar=None) -> dict:
    """The four sup-norm columns at one k."""
    if scal is None:
        scal = np.asarray(family.metric.scal(pts), dtype=float)
    if sbar is None:
        sbar = mean_scalar_curvature(family)
    alpha = solve_alpha(family, k, pts)
    ratio = h_prime_ratio(family, k, pts)
    dens = omega_fs_k(family, k, pts, step)
    return {
        "k": int(k),
        "sup_a1": float(np.max(np.abs(alpha - 1.0))),
        "sup_a2": float(np.max(np.abs(alpha - 1.0 - (sbar - scal) / (2.0 * k * k)))),
        "sup_hprime": float(np.max(np.abs(ratio - 1.0))),
        "sup_omega": float(np.max(np.abs(dens - 1.0))),
    }


def convergence_report(family: BergmanFamily, ks, pts, step: float = 1e-3) -> ConvergenceReport:
    """Sup-norm convergence columns over ``pts`` and their log-log slopes.

    sup_a2 subtracts the predicted second-order term (Sbar - Scal) / (2 k^2).
    Values below the column floor are dropped from the fits.  A solver
    failure at some k is recorded, its row is filled with NaN and the sweep
    continues.
    """
    ks = [int(k) for k in ks]
    scal = np.asarray(family.metric.scal(pts), dtype=float)
    sbar = mean_scalar_curvature(family)
    rows, failures = [], {}
    for k in ks:
        try:
            rows.append(convergence_row(family, k, pts, step, scal, sbar))
        except (NumericalFailure, SolverError) as exc:
            failures[k] = str(exc)
            rows.append({"k": k, **{c: float("nan") for c in COLUMNS}})
    fits, notes = {}, {}
    for col in COLUMNS:
        good = [(r["k"], r[col]) for r in rows if np.isfinite(r[col])]
        samples = [(k, v) for k, v in good if v >= FLOORS[col]]
        if len(samples) < len(good):
            notes[col] = f"{len(good) - len(samples)} values below {FLOORS[col]:g} dropped"
        fits[col] = loglog_slope(samples) if len(samples) >= 3 else None
    return ConvergenceReport(ks, rows, fits, notes, failures)
