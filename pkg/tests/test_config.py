import json

import pytest

from metapix.config import (
    RunConfig,
    TrainSettings,
    config_from_dict,
    config_to_dict,
    dump_default_config,
    load_config,
)


def test_default_round_trip():
    cfg = RunConfig()
    assert config_from_dict(config_to_dict(cfg)) == cfg
    assert config_from_dict({}) == cfg
    assert config_from_dict(json.loads(dump_default_config())) == cfg


def test_nested_override_keeps_other_fields():
    cfg = config_from_dict({"constants": {"l_lead": 0.2e-9}, "dataset_seed": 9})
    assert cfg.constants.l_lead == 0.2e-9
    assert cfg.constants.c_gap0 == RunConfig().constants.c_gap0
    assert cfg.dataset_seed == 9
    assert cfg.ga == RunConfig().ga


def test_switch_override():
    cfg = config_from_dict({"switch": {"state1": {"r": 12.0}}})
    assert cfg.switch.state1.r == 12.0
    assert cfg.switch.state1.l == RunConfig().switch.state1.l
    assert cfg.switch.state0 == RunConfig().switch.state0


def test_unknown_keys_rejected():
    with pytest.raises(ValueError, match="config.bogus"):
        config_from_dict({"bogus": 1})
    with pytest.raises(ValueError, match="switch.state2"):
        config_from_dict({"switch": {"state2": {"r": 1.0}}})
    with pytest.raises(ValueError, match="config.train.momentum"):
        config_from_dict({"train": {"momentum": 0.9}})


def test_train_settings_validation():
    with pytest.raises(ValueError):
        TrainSettings(hidden=())
    with pytest.raises(ValueError):
        TrainSettings(batch_size=0)
    with pytest.raises(ValueError):
        TrainSettings(lr0=0.0)


def test_load_config_paths(tmp_path):
    assert load_config(None) == RunConfig()
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValueError, match="not valid JSON"):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"train": {"hidden": [32, 32]}}))
    assert load_config(good).train.hidden == (32, 32)
