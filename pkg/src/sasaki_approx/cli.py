"""Command-line experiment runner.

    sasaki-approx {bergman,converge,sasaki,all} --config cfg.json [--out DIR] [--seed N]

Exit codes: 0 when every acceptance window passes, 1 on a numerical failure
or a missed window, 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .bergman import BergmanFamily, IllConditionedGramError, NumericalFailure, expansion_fit, expansion_formulas
from .calculus import NonKahlerError, loglog_slope
from .config import ConfigError, ExperimentConfig, load
from .embedding import induced_report, quasi_regular_diagonal
from .orbifold import h0
from .pullback import SolverError, convergence_report
from .sasaki import AXIOMS, PositivityError, check_sasakian_axioms, standard_structure, weighted_structure

log = logging.getLogger("sasaki_approx")

NUMERICAL_ERRORS = (NumericalFailure, SolverError, IllConditionedGramError, NonKahlerError, PositivityError, FloatingPointError)

# acceptance windows
B0_TOL = 0.01
B1_TOL = 0.05
SLOPE_WINDOWS = {
    "sup_a1": (-2.4, -1.6),
    "sup_a2": (-np.inf, -2.4),
    "sup_hprime": (-1.3, -0.7),
    "sup_omega": (-2.5, -1.5),
}
AXIOM_TOL = 1e-6
INDUCED_SLOPE_MAX = -0.7
INDUCED_FLOOR = 1e-7


@dataclass
class Outcome:
    """Named pass/fail checks of one subcommand."""

    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def extend(self, other: "Outcome"):
        self.checks.extend(other.checks)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _split_points(pts):
    z = np.asarray(pts)
    return np.real(z), np.imag(z) if np.iscomplexobj(z) else np.zeros(z.shape)


def cmd_bergman(cfg: ExperimentConfig, out: str) -> Outcome:
    """Weighted kernels on the sample grid and the pointwise (b0, b1) fit."""
    metric = cfg.metric()
    family = BergmanFamily(metric, cfg.p, cfg.rule)
    pts = metric.sample_grid(cfg.grid_points, cfg.seed)
    ks = cfg.ks
    values = np.array([family.weighted_kernel(k, pts) for k in ks])
    re, im = _split_points(pts)
    _write_csv(
        os.path.join(out, "bergman.csv"),
        ("k", "point", "x_re", "x_im", "weighted_kernel"),
        [(k, j, float(re[j]), float(im[j]), float(values[n, j])) for n, k in enumerate(ks) for j in range(len(pts))],
    )
    try:
        fit = expansion_fit(ks, values)
    except ValueError as exc:
        raise ConfigError(f"k range: {exc}") from None
    b0, b1 = expansion_formulas(family, pts)
    err0 = float(np.max(np.abs(fit.b0 - b0)) / abs(b0))
    err1 = float(np.max(np.abs(fit.b1 - b1) / np.abs(b1)))
    _write_json(
        os.path.join(out, "expansion_fit.json"),
        {
            "ks": list(fit.ks),
            "condition": fit.condition,
            "b0_formula": float(b0),
            "b0_fit": fit.b0.tolist(),
            "b0_max_relative_error": err0,
            "b1_formula": np.asarray(b1, dtype=float).tolist(),
            "b1_fit": fit.b1.tolist(),
            "b1_max_relative_error": err1,
        },
    )
    res = Outcome()
    res.add("bergman b0", err0 < B0_TOL, f"max relative error {err0:.2e} (window {B0_TOL:g})")
    res.add("bergman b1", err1 < B1_TOL, f"max relative error {err1:.2e} (window {B1_TOL:g})")
    return res


def cmd_converge(cfg: ExperimentConfig, out: str) -> Outcome:
    """Sup-norm convergence columns and their slopes."""
    metric = cfg.metric()
    family = BergmanFamily(metric, cfg.p, cfg.rule)
    pts = metric.sample_grid(cfg.grid_points, cfg.seed)
    report = convergence_report(family, cfg.ks, pts)
    report.write_csv(os.path.join(out, "converge.csv"))
    report.write_json(os.path.join(out, "slopes.json"))
    res = Outcome()
    for k, msg in sorted(report.failures.items()):
        res.add(f"converge solve k={k}", False, msg)
    for col, (lo, hi) in SLOPE_WINDOWS.items():
        s = report.slope(col)
        if s is None:
            res.add(f"converge {col}", True, "floor")
        else:
            res.add(f"converge {col}", lo <= s <= hi, f"slope {s:.3f} (window [{lo:g}, {hi:g}])")
    return res


def cmd_sasaki(cfg: ExperimentConfig, out: str) -> Outcome:
    """Axiom residuals, induced-structure distances and the diagonal table."""
    res = Outcome()
    rows = []
    for name, S in (("standard", standard_structure()), ("weighted", weighted_structure(cfg.sasaki_weights))):
        F = S.frame(S.sample(cfg.axiom_points, cfg.seed))
        r = {a: float(np.nanmax(v)) for a, v in check_sasakian_axioms(F).items()}
        w = S.weights
        rows.append((name, float(w[0]), float(w[1]), cfg.axiom_points) + tuple(r[a] for a in AXIOMS))
        worst = max(r.values())
        res.add(f"sasaki axioms {name}", worst < AXIOM_TOL, f"max residual {worst:.2e}")
    _write_csv(os.path.join(out, "sasaki_axioms.csv"), ("structure", "w0", "w1", "points") + AXIOMS, rows)

    family = BergmanFamily(cfg.metric(), cfg.p, cfg.rule)
    rep = induced_report(family, cfg.induced_ks, cfg.induced_points, cfg.seed)
    X = family.metric.orbifold
    dims = [sum(h0(X, d) for _, d, _ in family.degrees(k)) for k in rep.ks]
    for k, n in zip(rep.ks, dims):
        log.info("k=%d embedding dimension %d", k, n)
    _write_csv(
        os.path.join(out, "induced.csv"),
        ("k", "embedding_dimension", "distance", "sup_t", "sup_t_corrected"),
        zip(rep.ks, dims, rep.distances, rep.sup_t, rep.sup_t_corrected),
    )
    if max(rep.distances) < INDUCED_FLOOR:
        res.add("sasaki induced", True, "floor")
    else:
        s = loglog_slope(list(zip(rep.ks, rep.distances))).slope
        dec = bool(np.all(np.diff(rep.distances) < 0))
        res.add("sasaki induced", dec and s <= INDUCED_SLOPE_MAX, f"slope {s:.3f}, decreasing {dec}")

    if cfg.diagonal_depth > 1:
        rho = cfg.sasaki_weights[1] / cfg.sasaki_weights[0]
        diag = quasi_regular_diagonal(rho, cfg.diagonal_depth, cfg.diagonal_ks, cfg.induced_points, cfg.seed, cfg.p)
        _write_csv(
            os.path.join(out, "diagonal.csv"),
            ("j", "p", "q", "k", "approximation", "induced", "combined"),
            [(r.j, r.convergent.numerator, r.convergent.denominator, r.k, r.approximation, r.induced, r.combined) for r in diag],
        )
        comb = [r.combined for r in diag]
        res.add("sasaki diagonal", bool(np.all(np.diff(comb) < 0)), "combined " + ", ".join(f"{c:.4g}" for c in comb))
    return res


COMMANDS = {"bergman": (cmd_bergman,), "converge": (cmd_converge,), "sasaki": (cmd_sasaki,)}
COMMANDS["all"] = (cmd_bergman, cmd_converge, cmd_sasaki)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sasaki-approx", description="Bergman-kernel and Sasakian approximation experiments.")
    ap.add_argument("command", choices=list(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--seed", type=int, help="grid seed (overrides the config)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = load(args.config, out=args.out, seed=args.seed)
        os.makedirs(cfg.out, exist_ok=True)
        result = Outcome()
        for cmd in COMMANDS[args.command]:
            result.extend(cmd(cfg, cfg.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for name, ok, detail in result.checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
