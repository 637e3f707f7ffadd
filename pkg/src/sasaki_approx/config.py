"""Experiment configuration: a flat JSON object with validation and env overrides.

Every key is optional except ``k_min`` and ``k_max``.  Environment variables
``SASAKI_APPROX_<KEY>`` (key upper-cased) override the file; their values are
decoded as JSON when possible and taken as plain strings otherwise.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import asdict, dataclass, fields

from .calculus import NonKahlerError, QuadratureRule
from .orbifold import ChartMetric, ToricMetric, WeightedProjectiveLine

ENV_PREFIX = "SASAKI_APPROX_"
PERTURBATIONS = ("none", "radial", "nonradial")


class ConfigError(ValueError):
    """Invalid experiment configuration; the CLI exits with code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    k_min: int
    k_max: int
    k_step: int = 2
    orbifold_weights: tuple[int, int] = (1, 1)
    perturbation: str = "radial"
    epsilon: float = 0.1
    harmonic_degree: int = 2
    p: int = 2
    n_r: int = 200
    n_theta: int = 64
    grid_points: int = 50
    sasaki_weights: tuple[float, float] = (1.0, 2.0**0.5)
    axiom_points: int = 1000
    induced_ks: tuple[int, ...] = (10, 14, 18, 22, 26, 30)
    induced_points: int = 100
    diagonal_depth: int = 3
    diagonal_ks: tuple[int, ...] = (10, 15, 20)
    seed: int = 0
    out: str = "results"

    @property
    def ks(self) -> list[int]:
        return list(range(self.k_min, self.k_max + 1, self.k_step))

    @property
    def orbifold(self) -> WeightedProjectiveLine:
        return WeightedProjectiveLine(*self.orbifold_weights)

    @property
    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.n_r, self.n_theta)

    def metric(self):
        """The hermitian metric described by the orbifold and perturbation keys."""
        X = self.orbifold
        eps = 0.0 if self.perturbation == "none" else self.epsilon
        if X.order == 1:
            kind = "fs" if self.perturbation == "none" else self.perturbation
            return ChartMetric(eps, kind, self.harmonic_degree)
        if self.perturbation == "nonradial":
            raise ConfigError("perturbation 'nonradial' is only available on CP^1; use 'radial' (torus invariant)")
        return ToricMetric(X, eps)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_REQUIRED = ("k_min", "k_max")


def _line_of(text: str | None, key: str) -> str:
    if text:
        m = re.search(r'"%s"\s*:' % re.escape(key), text)
        if m:
            return f"line {text.count(chr(10), 0, m.start()) + 1}: "
    return ""


def _coerce(key: str, value, where: str):
    kind = _TYPES[key]

    def bad(msg):
        return ConfigError(f"{where}{key}: {msg}")

    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad(f"expected an integer, got {value!r}")
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad(f"expected a number, got {value!r}")
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise bad(f"expected a string, got {value!r}")
        return value
    # tuples
    if not isinstance(value, list):
        raise bad(f"expected a list, got {value!r}")
    elem = int if "int" in kind else float
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
        raise bad(f"expected a list of numbers, got {value!r}")
    if elem is int and any(not isinstance(v, int) for v in value):
        raise bad(f"expected a list of integers, got {value!r}")
    if "..." not in kind and len(value) != 2:
        raise bad(f"expected two entries, got {len(value)}")
    return tuple(elem(v) for v in value)


def _env_overrides(environ) -> dict:
    out = {}
    for key in _TYPES:
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is None:
            continue
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def from_dict(data: dict, text: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a decoded config tree; ``text`` is used to locate keys for messages."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    merged = dict(data)
    merged.update(overrides or {})
    unknown = sorted(set(merged) - set(_TYPES))
    if unknown:
        raise ConfigError(f"{_line_of(text, unknown[0])}unknown key {unknown[0]!r}")
    for key in _REQUIRED:
        if key not in merged:
            raise ConfigError(f"{key} required")
    values = {}
    for key, value in merged.items():
        where = "" if overrides and key in overrides else _line_of(text, key)
        values[key] = _coerce(key, value, where)
    cfg = ExperimentConfig(**values)
    _validate(cfg, text)
    return cfg


def _validate(cfg: ExperimentConfig, text: str | None):
    def fail(key, msg):
        raise ConfigError(f"{_line_of(text, key)}{key}: {msg}")

    a, b = cfg.orbifold_weights
    try:
        X = WeightedProjectiveLine(a, b)
    except ValueError as exc:
        fail("orbifold_weights", str(exc))
    if cfg.k_min < X.order:
        fail("k_min", f"must be >= the orbifold order {X.order}")
    if cfg.k_max < cfg.k_min:
        fail("k_max", "must be >= k_min")
    if cfg.perturbation not in PERTURBATIONS:
        fail("perturbation", f"must be one of {', '.join(PERTURBATIONS)}")
    for key in ("k_step", "p", "n_r", "n_theta", "grid_points", "axiom_points", "induced_points", "diagonal_depth", "harmonic_degree"):
        if getattr(cfg, key) <= 0:
            fail(key, "must be positive")
    if any(k < X.order for k in cfg.induced_ks):
        fail("induced_ks", f"entries must be >= the orbifold order {X.order}")
    if any(k < 1 for k in cfg.diagonal_ks):
        fail("diagonal_ks", "entries must be positive")
    if cfg.diagonal_depth > 1 and len(cfg.diagonal_ks) < cfg.diagonal_depth:
        fail("diagonal_ks", f"need {cfg.diagonal_depth} entries for diagonal_depth")
    if min(cfg.sasaki_weights) <= 0:
        fail("sasaki_weights", "entries must be positive")
    try:
        cfg.metric()
    except NonKahlerError as exc:
        fail("epsilon", f"outside the positivity bound ({exc})")


def loads(text: str, environ=None, **overrides) -> ExperimentConfig:
    """Parse config text; ``environ`` supplies SASAKI_APPROX_* overrides, keyword overrides win."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    over = _env_overrides(os.environ if environ is None else environ)
    over.update({k: v for k, v in overrides.items() if v is not None})
    return from_dict(data, text, over)


def load(path, environ=None, **overrides) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        return loads(text, environ, **overrides)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
