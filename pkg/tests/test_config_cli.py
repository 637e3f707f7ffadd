import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from sasaki_approx.cli import main
from sasaki_approx.config import ConfigError, ExperimentConfig, from_dict, load, loads

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = {
    "k_min": 10,
    "k_max": 20,
    "grid_points": 10,
    "n_r": 120,
    "n_theta": 32,
    "axiom_points": 50,
    "induced_ks": [10, 14, 18],
    "induced_points": 20,
    "diagonal_depth": 2,
    "diagonal_ks": [10, 12],
}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data, indent=2))
    return str(p)


def test_defaults_and_round_trip():
    cfg = loads('{"k_min": 10, "k_max": 40}', environ={})
    assert cfg.ks == list(range(10, 41, 2))
    assert cfg.perturbation == "radial" and cfg.sasaki_weights == (1.0, 2.0**0.5)
    assert loads(cfg.dumps(), environ={}) == cfg
    assert from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_load(name):
    cfg = load(CONFIGS / name, environ={})
    assert isinstance(cfg, ExperimentConfig)


def test_missing_required_key():
    with pytest.raises(ConfigError, match="k_min required"):
        loads('{"k_max": 40}', environ={})


@pytest.mark.parametrize(
    "text, message",
    [
        ('{\n  "k_min": 10,\n  "k_max": 40,\n  "epsilon": "big"\n}', "line 4: epsilon: expected a number"),
        ('{\n  "k_min": 10,\n  "k_max": 40,\n\n  "colour": 1\n}', "line 5: unknown key 'colour'"),
        ('{\n  "k_min": 10,\n  "k_max": 4\n}', "line 3: k_max: must be >= k_min"),
        ('{\n  "k_min": 1,\n  "k_max": 40,\n  "orbifold_weights": [1, 2]\n}', "line 2: k_min: must be >= the orbifold order 2"),
        ('{\n  "k_min": 10,\n  "k_max": 40,\n  "epsilon": 1.5\n}', "line 4: epsilon: outside the positivity bound"),
        ('{\n  "k_min": 10,\n  "k_max": 40,\n  "perturbation": "wobbly"\n}', "line 4: perturbation: must be one of"),
        ('{\n  "k_min": 10,\n  "k_max": 40,\n  "orbifold_weights": [1, 2],\n  "perturbation": "nonradial"\n}', "nonradial"),
        ('{\n  "k_min": 10,\n  "k_max": 40,\n  "sasaki_weights": [1, 2, 3]\n}', "line 4: sasaki_weights: expected two entries"),
        ('{\n  "k_min": 10,\n  "k_max": 40,\n}', "line 4 column 1"),
    ],
)
def test_line_precise_errors(text, message):
    with pytest.raises(ConfigError) as exc:
        loads(text, environ={})
    assert message in str(exc.value)


def test_env_overrides():
    env = {"SASAKI_APPROX_EPSILON": "0.05", "SASAKI_APPROX_OUT": "elsewhere", "SASAKI_APPROX_INDUCED_KS": "[12, 16, 20]"}
    cfg = loads('{"k_min": 10, "k_max": 40, "epsilon": 0.1}', environ=env)
    assert cfg.epsilon == 0.05 and cfg.out == "elsewhere" and cfg.induced_ks == (12, 16, 20)
    # explicit keyword (command-line flag) beats the environment
    assert loads('{"k_min": 10, "k_max": 40}', environ=env, out="flag").out == "flag"
    with pytest.raises(ConfigError, match="epsilon: expected a number"):
        loads('{"k_min": 10, "k_max": 40}', environ={"SASAKI_APPROX_EPSILON": "lots"})


def test_cli_missing_key_exits_2(tmp_path, capsys):
    path = write(tmp_path, {"k_max": 40})
    assert main(["all", "--config", path, "--out", str(tmp_path / "o")]) == 2
    assert "k_min required" in capsys.readouterr().err


def test_cli_unreadable_config_exits_2(tmp_path):
    assert main(["bergman", "--config", str(tmp_path / "absent.json")]) == 2


def test_cli_small_run_passes(tmp_path, capsys):
    path = write(tmp_path, {**SMALL, "perturbation": "none"})
    out = tmp_path / "o"
    assert main(["all", "--config", path, "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
    for name in ("bergman.csv", "expansion_fit.json", "converge.csv", "slopes.json", "sasaki_axioms.csv", "induced.csv", "diagonal.csv"):
        assert (out / name).is_file()


def test_cli_window_miss_exits_1(tmp_path, capsys):
    # the mixed-mode perturbation misses the b1 window (see README)
    code = main(["bergman", "--config", str(CONFIGS / "nonradial.json"), "--out", str(tmp_path)])
    assert code == 1
    assert "FAIL  bergman b1" in capsys.readouterr().out


def test_cli_numerical_failure_exits_1(tmp_path, monkeypatch, capsys):
    from sasaki_approx import cli
    from sasaki_approx.bergman import NumericalFailure

    def boom(cfg, out):
        raise NumericalFailure("synthetic")

    monkeypatch.setitem(cli.COMMANDS, "bergman", (boom,))
    assert main(["bergman", "--config", write(tmp_path, SMALL), "--out", str(tmp_path)]) == 1
    assert "numerical failure" in capsys.readouterr().err


def test_cli_seed_flag_changes_grid(tmp_path):
    path = write(tmp_path, {**SMALL, "perturbation": "none"})
    for seed in (0, 1):
        main(["bergman", "--config", path, "--out", str(tmp_path / f"s{seed}"), "--seed", str(seed)])
    a = (tmp_path / "s0" / "bergman.csv").read_text()
    b = (tmp_path / "s1" / "bergman.csv").read_text()
    assert a != b


def test_cli_outputs_bit_identical(tmp_path):
    path = write(tmp_path, SMALL)
    env = {k: v for k, v in os.environ.items() if not k.startswith("SASAKI_APPROX_")}
    outs = []
    for n in range(2):
        out = tmp_path / f"run{n}"
        subprocess.run([sys.executable, "-m", "sasaki_approx.cli", "all", "--config", path, "--out", str(out), "--seed", "3"], env=env, check=True, capture_output=True)
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
