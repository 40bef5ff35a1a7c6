import random
from types import SimpleNamespace

import pytest

from rhsim.geometry import (ConfigError, ExperimentConfig, Geometry, RowAddress,
                            TimingParams, config_hash, desk_preset, flatten,
                            load_config, max_acts_per_bank,
                            max_acts_per_bank_refresh_adjusted,
                            max_acts_per_channel, serialize_config, unflatten)


def test_flatten_identity_and_last_index():
    geo = Geometry()
    assert flatten(RowAddress(0, 0, 0, 0), geo) == 0
    assert flatten(RowAddress(0, 7, 3, 65535), geo) == 2_097_151
    assert geo.rows_per_rank == 2 * 1024 * 1024
    assert geo.row_bits == 21


def test_flatten_roundtrip_random():
    geo = Geometry()
    rng = random.Random(1)
    for _ in range(1000):
        addr = RowAddress(rng.randrange(2), rng.randrange(8), rng.randrange(4),
                          rng.randrange(65536))
        flat = flatten(addr, geo)
        assert unflatten(flat, addr.rank, geo) == addr


def test_flatten_exhaustive_small(tiny_geo):
    seen = set()
    for bg in range(4):
        for row in range(4):
            addr = RowAddress(0, bg, 0, row)
            flat = flatten(addr, tiny_geo)
            assert unflatten(flat, 0, tiny_geo) == addr
            seen.add(flat)
    assert seen == set(range(tiny_geo.rows_per_rank))


def test_flatten_bounds_errors():
    geo = Geometry()
    with pytest.raises(ValueError):
        flatten(RowAddress(0, 8, 0, 0), geo)
    with pytest.raises(ValueError):
        flatten(RowAddress(2, 0, 0, 0), geo)
    with pytest.raises(ValueError):
        flatten(RowAddress(0, 0, 0, 65536), geo)
    with pytest.raises(ValueError):
        unflatten(geo.rows_per_rank, 0, geo)


def test_geometry_rejects_non_power_of_two():
    with pytest.raises(ConfigError):
        Geometry(rows_per_bank=1000)
    with pytest.raises(ConfigError):
        Geometry(bankgroups_per_rank=3)


def test_max_acts_defaults():
    t = TimingParams()
    assert max_acts_per_bank(t) == 666_666
    # refresh-adjusted: floor((t_refw - 8192 * t_rfc) / t_rc), computed directly
    expected = (32_000_000 - 8192 * 295) // 48
    assert expected == 616_320
    assert max_acts_per_bank_refresh_adjusted(t) == expected
    assert max_acts_per_channel(t) == 12_800_000


def test_max_acts_degenerate_cases():
    t = TimingParams(t_refw_ns=48.0, t_refi_ns=48.0)
    assert max_acts_per_bank(t) == 1
    # formula clamps at zero window (field validation forbids 0, so probe the
    # arithmetic through a stand-in)
    stub = SimpleNamespace(t_refw_ns=0.0, t_rc_ns=48.0)
    assert max_acts_per_bank(stub) == 0


def test_refs_per_window_default_is_8192():
    assert TimingParams().refs_per_window == 8192


def test_load_config_empty_is_defaults():
    cfg = load_config([])
    assert cfg.n_rh == 500
    assert cfg.tracker == "dapper-h"
    assert cfg.n_m == 250
    assert cfg.geometry == Geometry()
    assert cfg.timing == TimingParams()


def test_load_config_odd_n_rh_uses_floor():
    cfg = load_config(["n_rh = 125"])
    assert cfg.n_rh == 125
    assert cfg.n_m == 62


def test_load_config_rejects_below_minimum():
    with pytest.raises(ConfigError):
        load_config(["n_rh = 3"])


def test_load_config_unknown_key_names_line():
    with pytest.raises(ConfigError, match="line 2"):
        load_config(["# comment", "bogus_key = 7"])


def test_load_config_malformed_value_names_line():
    with pytest.raises(ConfigError, match="line 1"):
        load_config(["n_rh = not_a_number"])
    with pytest.raises(ConfigError, match="line 1"):
        load_config(["just some text"])


def test_config_roundtrip():
    cfg = load_config(["n_rh = 250", "tracker = hydra", "workload = uniform",
                       "seed = 42", "t_rrd_s = 3.6", "rows_per_bank = 4096",
                       "bankgroups = 2", "banks_per_bankgroup = 1", "ranks = 1",
                       "t_refw = 1000000", "t_refi = 1953.125"])
    text = serialize_config(cfg)
    again = load_config(text.splitlines())
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_desk_preset_shape():
    cfg = desk_preset()
    assert cfg.geometry.banks_per_channel == 2
    assert cfg.geometry.rows_per_bank == 4096
    assert cfg.n_rh == 64
    assert cfg.timing.refs_per_window == 512


def test_config_validation_rules():
    with pytest.raises(ConfigError):
        ExperimentConfig(tracker="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(workload="nope")
    with pytest.raises(ConfigError):
        ExperimentConfig(group_size=100)   # not a power of two
