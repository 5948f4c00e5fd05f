import pytest

from manyq.config import ConfigError, load_config, parse_config
from manyq.distributions import Erlang, Exponential
from manyq.fluid import EquilibriumInitial, ZeroMeasure

GOOD = """
n_servers: 4
arrival:
  distribution: {kind: exponential, rate: 3.0}
service: {kind: erlang, shape: 2, rate: 2.0}
patience: {kind: exponential, rate: 1.0}
run:
  horizon: 50.0
  seed: 7
"""


def test_parse_good_scenario():
    cfg = parse_config(GOOD)
    assert cfg.n_servers == 4
    assert isinstance(cfg.arrival, Exponential) and cfg.arrival.rate == 3.0
    assert isinstance(cfg.service, Erlang)
    assert cfg.horizon == 50.0 and cfg.seed == 7
    # defaults
    assert cfg.warmup is None and cfg.warmup_or_default == pytest.approx(10.0)
    assert cfg.dt == 1e-3 and cfg.audit is True and cfg.replications == 1
    assert len(cfg.sha256) == 64


def test_patience_and_no_abandonment_conflict():
    with pytest.raises(ConfigError):
        parse_config(GOOD + "no_abandonment: true\n")


def test_unknown_keys_rejected_everywhere():
    with pytest.raises(ConfigError):
        parse_config("bogus: 1\n")
    with pytest.raises(ConfigError):
        parse_config("run: {horizon: 10, pace: fast}\n")
    with pytest.raises(ConfigError):
        parse_config("service: {kind: exponential, rate: 1, mean: 1}\n")
    with pytest.raises(ConfigError):
        parse_config("arrival: {distribution: {kind: exponential, rate: 1}, burst: 2}\n")


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        parse_config("n_servers: 0\n")
    with pytest.raises(ConfigError):
        parse_config("n_servers: [2, -1]\n")
    with pytest.raises(ConfigError):
        parse_config("run: {horizon: -5}\n")
    with pytest.raises(ConfigError):
        parse_config("run: {horizon: 10, warmup: 10}\n")
    with pytest.raises(ConfigError):
        parse_config("not: [valid: yaml\n")
    with pytest.raises(ConfigError):
        parse_config("- just\n- a\n- list\n")


def test_n_servers_list_and_rate_scaling():
    cfg = parse_config(
        "n_servers: [10, 50]\narrival:\n  rate_scaling: {lam_bar: 0.9}\n"
    )
    assert cfg.n_servers == [10, 50]
    assert cfg.lam_bar == 0.9 and cfg.arrival is None
    with pytest.raises(ConfigError):
        parse_config("arrival: {rate_scaling: {lam_bar: -1}}\n")


def test_initial_forms():
    assert parse_config("initial: empty\n").initial == "empty"
    cfg = parse_config("initial: stationary\n")
    assert cfg.initial == "empty" and cfg.stationary_start is True
    cfg = parse_config("initial: {in_service_ages: [0.1], queue_waits: []}\n")
    assert cfg.initial == {"in_service_ages": [0.1], "queue_waits": []}
    with pytest.raises(ConfigError):
        parse_config("initial: warm\n")


def test_fluid_section_and_profiles():
    cfg = parse_config(
        GOOD
        + """
fluid:
  lam: 1.5
  X0: 1.5
  nu0: {equilibrium: 1.0}
  eta0: {equilibrium: 1.5}
"""
    )
    inp = cfg.fluid_input()
    assert inp.lam == 1.5 and inp.X0 == 1.5
    assert isinstance(inp.nu0, EquilibriumInitial)
    assert isinstance(inp.eta0, EquilibriumInitial)

    cfg = parse_config(GOOD + "fluid: {lam: 1.0}\n")
    inp = cfg.fluid_input()
    assert isinstance(inp.nu0, ZeroMeasure) and inp.X0 == 0.0

    with pytest.raises(ConfigError):
        parse_config(GOOD + "fluid: {X0: 1.0}\n")  # missing lam
    with pytest.raises(ConfigError):
        parse_config(GOOD).fluid_input()  # no fluid section
    with pytest.raises(ConfigError):
        parse_config(GOOD + "fluid: {lam: 1, nu0: {equilibrium: 1, atoms: []}}\n").fluid_input()


def test_load_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/scenario.yaml")


def test_empty_config_has_defaults():
    cfg = parse_config("")
    assert cfg.n_servers is None and cfg.horizon == 100.0
