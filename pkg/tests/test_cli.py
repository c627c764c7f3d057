"""Command-line interface: config resolution, exit codes, manifests.

All commands run in-process through run(argv) on a small grid.
"""
from __future__ import annotations

import json

import numpy as np
import pytest

from neelwall.cli import (
    DEFAULTS, EXIT_CONFIG, EXIT_OK, SUBCOMMANDS, _COMMANDS, run,
)
from neelwall.grid import Grid
from neelwall.reports import load_profile

SMALL = ["--L", "40", "--n", "256"]


def _manifest(out):
    with open(out / "manifest.json") as fh:
        return json.load(fh)


def test_every_subcommand_has_a_body():
    assert set(SUBCOMMANDS) == set(_COMMANDS)


def test_solve_static_writes_profile_and_manifest(tmp_path):
    code = run(["solve-static", *SMALL, "--out", str(tmp_path)])
    assert code == EXIT_OK
    m = _manifest(tmp_path)
    assert m["command"] == "solve-static"
    assert m["grid"] == {"L": 40.0, "n": 256, "dx": 40.0 * 2 / 256}
    assert m["seeds"] == {"master": 0}
    assert m["wall_clock_seconds"] > 0
    assert any(p.endswith("static_profile.neelw") for p in m["outputs"])
    # edge diagnostic: cos(theta) near saturation at the seam
    assert abs(m["periodization_cos_theta_edge"]) <= 1e-2
    prof = load_profile(tmp_path / "static_profile.neelw")
    assert prof.residual <= 1e-6
    assert m["scalars"]["residual"] == pytest.approx(prof.residual,
                                                     rel=1e-6, abs=1e-12)


def test_solve_moving_reports_speed(tmp_path):
    code = run(["solve-moving", *SMALL, "--H", "0.001",
                "--out", str(tmp_path)])
    assert code == EXIT_OK
    m = _manifest(tmp_path)
    assert m["scalars"]["c"] == pytest.approx(1e-3 / 1.0102, rel=1e-2)
    prof = load_profile(tmp_path / "moving_profile.neelw")
    assert prof.H == 0.001


def test_spectrum_static(tmp_path):
    code = run(["spectrum", *SMALL, "--H", "0", "--out", str(tmp_path)])
    assert code == EXIT_OK
    m = _manifest(tmp_path)
    assert abs(m["scalars"]["lambda0_re"]) <= 1e-4
    assert m["scalars"]["Lambda0"] > 0.3
    assert (tmp_path / "spectrum.csv").exists()


def test_simulate_quick(tmp_path):
    code = run(["simulate", *SMALL, "--H", "0", "--dt", "0.02",
                "--t-end", "10", "--out", str(tmp_path)])
    assert code == EXIT_OK
    m = _manifest(tmp_path)
    assert m["scalars"]["decay_rate"] > 0.2
    assert m["scalars"]["decay_r2"] >= 0.95
    assert abs(m["scalars"]["final_defect"]) <= 1e-4


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 128          # coarse\nnu = 2.0\nL = 40\n")
    out = tmp_path / "out"
    # flag --n overrides the file; nu comes from the file
    code = run(["solve-static", "--config", str(cfg), "--n", "256",
                "--out", str(out)])
    assert code == EXIT_OK
    m = _manifest(out)
    assert m["config"]["n"] == 256
    assert m["config"]["nu"] == 2.0
    # untouched keys keep their defaults
    assert m["config"]["dt"] == DEFAULTS["dt"]


def test_bad_config_file_exits_3(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("volume = 11\n")
    assert run(["solve-static", "--config", str(cfg),
                "--out", str(tmp_path)]) == EXIT_CONFIG
    cfg.write_text("n not-an-assignment\n")
    assert run(["solve-static", "--config", str(cfg),
                "--out", str(tmp_path)]) == EXIT_CONFIG
    assert not (tmp_path / "manifest.json").exists()


def test_bad_flag_values_exit_3(tmp_path):
    assert run(["solve-static", "--n", "256", "--L", "40", "--mode", "weird",
                "--out", str(tmp_path)]) == EXIT_CONFIG
    assert run(["frobnicate", "--out", str(tmp_path)]) == EXIT_CONFIG
    # moving-wall commands reject the local stray-field model
    assert run(["solve-moving", *SMALL, "--mode", "local",
                "--out", str(tmp_path)]) == EXIT_CONFIG
    # field outside the solver envelope
    assert run(["solve-moving", *SMALL, "--H", "0.5",
                "--out", str(tmp_path)]) == EXIT_CONFIG


def test_mobility_takes_field_list(tmp_path):
    # the = form keeps argparse from reading the leading minus as a flag
    code = run(["mobility", *SMALL, "--H=-0.002,-0.001,0.001,0.002",
                "--out", str(tmp_path)])
    assert code == EXIT_OK
    m = _manifest(tmp_path)
    assert m["scalars"]["beta_measured"] == pytest.approx(
        m["scalars"]["beta_predicted"], rel=1e-2)
    assert (tmp_path / "mobility.csv").exists()


def test_same_seed_same_outputs(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        assert run(["solve-static", *SMALL, "--seed", "7",
                    "--out", str(out)]) == EXIT_OK
    p1 = (out1 / "static_profile.neelw").read_bytes()
    p2 = (out2 / "static_profile.neelw").read_bytes()
    assert p1 == p2
