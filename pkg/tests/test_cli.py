import json
import os

import pytest

from manyq.cli import main

SIM = """
n_servers: 2
arrival:
  distribution: {kind: exponential, rate: 1.5}
service: {kind: exponential, rate: 1.0}
patience: {kind: exponential, rate: 1.0}
run: {horizon: 50.0, seed: 3}
"""

FLUID = """
service: {kind: erlang, shape: 2, rate: 2.0}
fluid: {lam: 1.0, horizon: 30.0}
run: {seed: 0}
"""

INV = """
service: {kind: exponential, rate: 1.0}
patience: {kind: exponential, rate: 1.0}
arrival:
  rate_scaling: {lam_bar: 2.0}
"""


def write(tmp_path, text, name="scenario.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_simulate_writes_trajectory_and_summary(tmp_path):
    out = str(tmp_path / "out")
    rc = main(["simulate", "--config", write(tmp_path, SIM), "--out", out, "--quiet"])
    assert rc == 0
    lines = open(os.path.join(out, "trajectory.csv")).read().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert lines[1] == "time,event_kind,X,nu_mass,eta_mass,Q,R,S,D,K,chi"
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["audit_failures"] == 0
    assert summary["events"] == len(lines) - 2
    assert "config_sha256" in summary and summary["seed"] == 3


def test_fluid_subcommand_reaches_invariant_queue(tmp_path):
    out = str(tmp_path / "out")
    rc = main(["fluid", "--config", write(tmp_path, FLUID), "--out", out, "--quiet"])
    assert rc == 0
    summary = json.load(open(os.path.join(out, "summary.json")))
    # critical load, no abandonment declared but lam = 1 keeps Q at 0
    assert summary["final"]["X"] == pytest.approx(1.0, abs=5e-3)
    assert summary["mass_balance_residual"] <= 1e-4
    lines = open(os.path.join(out, "fluid.csv")).read().splitlines()
    assert lines[1] == "t,X,Q,B,K,R,eta_mass,hs_nu"


def test_invariant_subcommand_closed_form(tmp_path):
    out = str(tmp_path / "out")
    rc = main(["invariant", "--config", write(tmp_path, INV), "--out", out, "--quiet"])
    assert rc == 0
    inv = json.load(open(os.path.join(out, "invariant.json")))
    assert inv["regime"] == "supercritical"
    assert inv["x_star"] == pytest.approx(2.0, abs=1e-6)
    assert inv["unique"] is True


def test_exit_code_on_config_errors(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml"), "--quiet"]) == 2
    bad = write(tmp_path, SIM + "bogus: 1\n", "bad.yaml")
    assert main(["simulate", "--config", bad, "--quiet"]) == 2
    # subcommand that requires a config
    assert main(["simulate", "--quiet"]) == 2
    # library-level ValueError also maps to a config error
    neg = write(tmp_path, SIM.replace("rate: 1.5", "rate: -1.5"), "neg.yaml")
    assert main(["simulate", "--config", neg, "--quiet"]) == 2


def test_seed_override_and_env_out(tmp_path, monkeypatch):
    cfgp = write(tmp_path, SIM)
    out = str(tmp_path / "envout")
    monkeypatch.setenv("MANYQ_OUT", out)
    monkeypatch.chdir(tmp_path)
    rc = main(["simulate", "--config", cfgp, "--seed", "99", "--quiet"])
    assert rc == 0
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["seed"] == 99


def test_reruns_are_byte_identical(tmp_path):
    cfgp = write(tmp_path, SIM)
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert main(["simulate", "--config", cfgp, "--out", out, "--quiet"]) == 0
        outs.append(open(os.path.join(out, "trajectory.csv"), "rb").read())
    assert outs[0] == outs[1]
