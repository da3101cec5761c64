#!/usr/bin/env python3
"""
Tests for experiment_config: defaults, validation messages, presets and the
config echo.
"""

import json
import math
from pathlib import Path

import pytest

from experiment_config import (
    DEFAULT_BURN_IN,
    ComponentConfig,
    StartConfig,
    VariantConfig,
    config_from_dict,
    echo_config,
    parse_config,
)
from mh_sampler import WarmStart
from sampler_errors import ConfigError

GAUSSIAN_TARGET = {"kind": "product", "potential": {"name": "gaussian"}}


def single_run(**extra):
    data = {"experiment": "single-run", "target": GAUSSIAN_TARGET,
            "variants": [{"name": "fMALA", "ell": 1.79}], "dimensions": [10]}
    data.update(extra)
    return data


def test_single_run_defaults():
    cfg = config_from_dict(single_run())
    assert cfg.burn_in == DEFAULT_BURN_IN == 1000
    assert cfg.thin == 1
    assert cfg.seed == 0
    assert cfg.threads == 1
    assert cfg.coord_mode == "first"
    assert cfg.start == StartConfig("origin")
    assert cfg.variants[0].step_size(100) == pytest.approx(1.79 ** 2 * 100 ** -0.2)


def test_unknown_variant_names_the_field():
    with pytest.raises(ConfigError) as info:
        config_from_dict(single_run(variants=["HMC"]))
    assert info.value.field == "variants[0].name"
    assert "HMC" in str(info.value)


def test_unknown_field_is_rejected():
    with pytest.raises(ConfigError) as info:
        config_from_dict(single_run(iterations=5))
    assert info.value.field == "iterations"


@pytest.mark.parametrize("changes, field", [
    ({"dimensions": [10, 20]}, "dimensions"),
    ({"variants": [{"name": "fMALA"}]}, "variants[0]"),
    ({"seed": -1}, "seed"),
    ({"seed": 2 ** 64}, "seed"),
    ({"burn_in": 1.5}, "burn_in"),
    ({"thin": 0}, "thin"),
    ({"coord_mode": "last"}, "coord_mode"),
    ({"variants": [{"name": "gbOMA", "ell": 1.0, "params": [1, 1, 1]}]}, "variants[0].params"),
    ({"variants": [{"name": "MALA", "h": -0.1}]}, "variants[0].h"),
    ({"target": {"kind": "product"}}, "target.potential"),
    ({"target": {"kind": "ar1"}, "dimensions": [1]}, "dimensions"),
])
def test_schema_violations(changes, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(single_run(**changes))
    assert info.value.field == field


def test_missing_required_section():
    with pytest.raises(ConfigError) as info:
        config_from_dict({"experiment": "efficiency-sweep", "target": GAUSSIAN_TARGET, "variants": ["MALA"]})
    assert info.value.field == "dimensions"
    with pytest.raises(ConfigError) as info:
        config_from_dict({"experiment": "ergodicity-probe"})
    assert info.value.field == "probe"


def test_invalid_gbo_parameters_are_a_config_error():
    with pytest.raises(ConfigError) as info:
        config_from_dict(single_run(variants=[{"name": "gbOMA", "ell": 1.0, "params": [1, 1, 1, 0.1, 0.01]}]))
    assert info.value.field == "variants[0].name"


def test_transient_rule_is_for_mala_only():
    data = {"experiment": "transient-trace", "target": GAUSSIAN_TARGET, "dimensions": [100],
            "strategies": [{"name": "odd", "components": [{"variant": "RWM", "rule": "transient"}]}]}
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.field == "strategies[0].components[0].rule"


def test_strategy_presets_and_step_rules():
    data = {"experiment": "acf-compare", "target": GAUSSIAN_TARGET, "dimensions": [1000],
            "strategies": ["hybrid-fmala-transient", "RWM"]}
    cfg = config_from_dict(data)
    kernel = cfg.strategies[0].kernel(1000)
    assert [c.weight for c in kernel.components] == [0.5, 0.5]
    assert kernel.components[0].h == pytest.approx(1.79 ** 2 * 1000 ** -0.2)
    assert kernel.components[1].h == pytest.approx(2.0 / math.sqrt(1000))
    assert cfg.strategies[1].kernel(1000).components[0].h == pytest.approx(2.38 ** 2 / 1000)
    with pytest.raises(ConfigError):
        config_from_dict(dict(data, strategies=["hybrid-everything"]))


def test_component_with_explicit_step():
    assert ComponentConfig("MALA", None, 0.25).step_size(10_000) == 0.25


def test_exponent_override_is_reported():
    cfg = config_from_dict(single_run(variants=[{"name": "MALA", "ell": 1.0, "exponent": 0.2}]))
    assert cfg.variants[0].exponent_overridden
    assert len(cfg.overrides()) == 1
    assert not VariantConfig("MALA", exponent=1.0 / 3.0).exponent_overridden


def test_variant_without_step_rule():
    with pytest.raises(ValueError):
        VariantConfig("MALA").step_size(10)


def test_start_rules():
    cfg = config_from_dict(single_run(start={"rule": "stationary-warmstart", "n_warm": 500}))
    assert cfg.start.resolve(10) == WarmStart(500)
    cfg = config_from_dict(single_run(start=[1.0, 2.0]))
    assert list(cfg.start.resolve(2)) == [1.0, 2.0]
    with pytest.raises(ConfigError):
        cfg.start.resolve(3)
    with pytest.raises(ConfigError):
        config_from_dict(single_run(start="far-away"))


def test_probe_section_defaults():
    cfg = config_from_dict({"experiment": "ergodicity-probe",
                            "probe": {"rows": [{"variant": "bUOA", "beta": 4, "gamma": 0.25, "h": 0.1}]}})
    assert cfg.probe.rows[0].start_norms == (5.0, 20.0)
    assert cfg.probe.min_band_visits == 50
    assert cfg.probe.escape_radius == 1e6


def test_asymptotic_section():
    cfg = config_from_dict({"experiment": "asymptotic",
                            "asymptotic": {"variants": ["fM", {"name": "gbO", "params": [2, 1, 1, 1, 1]}],
                                           "potentials": [{"name": "double-well"}]}})
    assert [v.name for v in cfg.asymptotic.variants] == ["fM", "gbO"]
    assert cfg.asymptotic.variants[1].params == (2.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        config_from_dict({"experiment": "asymptotic", "asymptotic": {"variants": ["MALA"]}})
    with pytest.raises(ConfigError) as info:
        config_from_dict({"experiment": "asymptotic", "asymptotic": {"variants": ["fM"], "n_samples": 5000}})
    assert info.value.field.endswith("n_samples")
    assert config_from_dict({"experiment": "asymptotic",
                             "asymptotic": {"n_samples": 10_000}}).asymptotic.n_samples == 10_000


@pytest.mark.parametrize("data", [
    single_run(seed=7, start={"rule": "stationary-warmstart", "n_warm": 50}),
    {"experiment": "efficiency-sweep", "target": {"kind": "ar1", "link": "sine"}, "dimensions": [10, 20],
     "variants": ["MALA", {"name": "fMALA", "exponent": 0.2}], "ell_grid": [0.5, 1.0],
     "coord_mode": "full_mean", "limit_k": 0.05, "threads": 2},
    {"experiment": "acf-compare", "target": {"kind": "product", "potential": {"name": "double-well"}},
     "dimensions": [50], "strategies": ["hybrid-mala-rwm"], "max_lag": 20},
    {"experiment": "ergodicity-probe",
     "probe": {"rows": [{"variant": "fULA", "beta": 2, "gamma": 0.5, "h": 0.19, "start_norm": 5}]}},
    {"experiment": "asymptotic", "asymptotic": {"variants": ["bO"], "ell_curve": [1.0, 2.0],
                                                "potentials": [{"name": "exponential-class",
                                                                "beta": 4, "gamma": 0.25}]}},
])
def test_echo_parses_back_to_the_same_config(data):
    cfg = config_from_dict(data)
    echo = echo_config(cfg)
    assert "\n" not in echo
    assert config_from_dict(json.loads(echo)) == cfg


def test_json_error_reports_the_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "experiment": "single-run",\n  oops\n}\n', encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        parse_config(path)
    assert info.value.line == 3


def test_field_error_reports_the_line(tmp_path):
    path = tmp_path / "bad_thin.json"
    path.write_text(json.dumps(single_run(thin=0), indent=2), encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        parse_config(path)
    assert info.value.field == "thin"
    assert '"thin"' in path.read_text(encoding="utf-8").splitlines()[info.value.line - 1]


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_config(tmp_path / "nope.json")
    assert info.value.field == "<file>"


def test_shipped_configs_parse():
    for name in ("sweep_double_well.json", "sweep_ar1_half.json", "transient_gaussian.json",
                 "acf_gaussian.json", "ergodicity_probe.json", "asymptotic_constants.json",
                 "single_run_example.json"):
        cfg = parse_config(Path(__file__).parent / name)
        assert cfg.experiment
