import json
import math

import pytest

from fraclab.config import ConfigError, ExperimentConfig, config_from_dict, parse_config
from fraclab.constants import kappa_from_delta, kappa_from_params

MINIMAL = {
    "params": {"alpha": 0.5, "d": 1, "p": 3.0},
    "initial": {"kind": "gaussian"},
}


def test_minimal_config_fills_defaults():
    cfg = config_from_dict(MINIMAL)
    assert cfg.grid.n == 4096
    assert cfg.grid.half_length == 512.0
    assert cfg.time.t_end == 8.0
    assert cfg.time.eta == 0.1
    assert cfg.time.output_schedule == "dyadic"
    assert cfg.potential.kappa == "from-p"
    assert cfg.initial.amplitude == 1.0


def test_round_trip_identity():
    cfg = config_from_dict(MINIMAL)
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()
    assert again.config_hash() == cfg.config_hash()


def test_hash_sensitivity():
    cfg = config_from_dict(MINIMAL)
    doc = dict(MINIMAL, grid={"n": 8192})
    assert config_from_dict(doc).config_hash() != cfg.config_hash()


def test_alpha_range_error_names_interval():
    doc = {"params": {"alpha": 2.5, "d": 1, "p": 3.0}, "initial": {"kind": "zero"}}
    with pytest.raises(ConfigError, match=r"\(0, 2\)"):
        config_from_dict(doc)


def test_all_errors_collected():
    doc = {
        "params": {"alpha": 2.5, "d": 7, "p": 0.5},
        "grid": {"n": 100, "L": -1.0},
        "initial": {"kind": "nope"},
        "bogus": 1,
    }
    with pytest.raises(ConfigError) as err:
        config_from_dict(doc)
    assert len(err.value.errors) >= 6


def test_unknown_keys_rejected_per_kind():
    doc = {
        "params": {"alpha": 0.5, "d": 1, "p": 3.0},
        "initial": {"kind": "gaussian", "delta": 0.5},
    }
    with pytest.raises(ConfigError, match="unknown key 'delta'"):
        config_from_dict(doc)


def test_singular_regime_required_for_singular_data():
    # p_sg = 1 + alpha/(d - alpha) = 2 here; p = 1.5 sits below it
    doc = {
        "params": {"alpha": 0.5, "d": 1, "p": 1.5},
        "initial": {"kind": "truncated_singular", "delta": 0.5},
    }
    with pytest.raises(ConfigError, match="singular steady state"):
        config_from_dict(doc)


def test_schedule_validation():
    bad_order = dict(MINIMAL, time={"output_schedule": [2.0, 1.0]})
    with pytest.raises(ConfigError, match="strictly increasing"):
        config_from_dict(bad_order)
    beyond = dict(MINIMAL, time={"t_end": 4.0, "output_schedule": [1.0, 8.0]})
    with pytest.raises(ConfigError, match="exceeds t_end"):
        config_from_dict(beyond)
    named = dict(MINIMAL, time={"output_schedule": "weekly"})
    with pytest.raises(ConfigError, match="unknown named schedule"):
        config_from_dict(named)


def test_from_delta_needs_a_delta():
    doc = dict(MINIMAL, potential={"kappa": "from-delta"})
    with pytest.raises(ConfigError, match="from-delta"):
        config_from_dict(doc)
    # a delta-bearing datum supplies the fallback
    doc = {
        "params": {"alpha": 0.5, "d": 1, "p": 3.0},
        "initial": {"kind": "truncated_singular", "delta": 0.5},
        "potential": {"kappa": "from-delta"},
    }
    cfg = config_from_dict(doc)
    want = kappa_from_delta(cfg.params, 0.5)
    assert cfg.kappa() == pytest.approx(want, rel=1e-14)


def test_kappa_resolution():
    cfg = config_from_dict(MINIMAL)
    assert cfg.kappa() == pytest.approx(kappa_from_params(cfg.params), rel=1e-14)
    explicit = config_from_dict(dict(MINIMAL, potential={"kappa": 0.25}))
    assert explicit.kappa() == 0.25
    negative = dict(MINIMAL, potential={"kappa": -1.0})
    with pytest.raises(ConfigError, match="nonnegative"):
        config_from_dict(negative)


def test_output_times_dyadic_and_explicit():
    cfg = config_from_dict(dict(MINIMAL, grid={"n": 256, "L": 32.0}))
    ts = cfg.output_times()
    # t0 = 4 h^alpha = 4 * 0.25^0.5 = 2, doubling under t_end = 8
    assert ts[0] == pytest.approx(2.0)
    assert list(ts) == pytest.approx([2.0, 4.0, 8.0])
    explicit = config_from_dict(
        dict(MINIMAL, time={"output_schedule": [1.0, 2.0, 3.0]})
    )
    assert list(explicit.output_times()) == [1.0, 2.0, 3.0]


def test_parse_rejects_bad_json():
    with pytest.raises(ConfigError, match="not valid JSON"):
        parse_config("{nope")


def test_initial_field_scaling():
    doc = {
        "params": {"alpha": 0.5, "d": 1, "p": 3.0},
        "grid": {"n": 64, "L": 8.0},
        "initial": {"kind": "gaussian", "amplitude": 1.0, "width": 1.0, "scale": 2.5},
    }
    cfg = config_from_dict(doc)
    f = cfg.initial_field()
    assert f.values[32] == pytest.approx(2.5)
