"""Flat key=value run-configuration parsing and round-trips."""

import dataclasses

import pytest

from moddx.config import (
    RunConfig,
    config_from_dict,
    load_config,
    parse_config,
    save_config,
)
from moddx.errors import FormatError


def test_defaults_match_documented_values():
    cfg = RunConfig()
    assert cfg.n_mels == 64
    assert cfg.target_rate == 16000
    assert (cfg.max_duration_s, cfg.min_duration_s) == (10.0, 1.0)
    assert (cfg.window_ms, cfg.hop_ms, cfg.n_fft) == (256.0, 64.0, 400)
    assert (cfg.attn_hidden, cfg.embedding_size) == (128, 768)
    assert (cfg.dropout, cfg.prune_pct, cfg.leaky_slope) == (0.25, 0.0, 0.1)
    assert cfg.use_temporal and cfg.use_dynamics
    assert (cfg.epochs, cfg.batch_size) == (30, 1)
    assert (cfg.lr_start, cfg.lr_end) == (1e-4, 1e-5)
    assert (cfg.beta1, cfg.beta2, cfg.adam_eps) == (0.9, 0.999, 1e-8)
    assert cfg.weight_decay == 0.01
    assert cfg.early_stop and (cfg.warmup_epochs, cfg.patience) == (2, 3)
    assert cfg.augment
    assert (cfg.snr_min_db, cfg.snr_max_db) == (0.0, 15.0)
    assert (cfg.speed_min, cfg.speed_max) == (0.95, 1.05)
    assert cfg.seed == 0


def test_empty_text_yields_defaults():
    assert parse_config("") == RunConfig()


def test_key_value_lines_with_comments_and_blanks():
    cfg = parse_config(
        """
# optimizer block
lr_start = 0.001   # ramp start
lr_end=0.0001
epochs = 5

use_dynamics = false
n_mels = 32
"""
    )
    assert cfg.lr_start == 0.001
    assert cfg.lr_end == 0.0001
    assert cfg.epochs == 5
    assert cfg.use_dynamics is False
    assert cfg.n_mels == 32
    assert cfg.use_temporal is True  # untouched default


@pytest.mark.parametrize(
    "text,expected",
    [("true", True), ("True", True), ("1", True), ("yes", True),
     ("false", False), ("0", False), ("no", False)],
)
def test_boolean_spellings(text, expected):
    assert parse_config(f"augment = {text}").augment is expected


def test_unknown_key_cites_line_number():
    with pytest.raises(FormatError, match=r"line 2.*learning_rate"):
        parse_config("epochs = 3\nlearning_rate = 0.1\n")


def test_duplicate_key_cites_line_number():
    with pytest.raises(FormatError, match=r"line 3.*duplicate"):
        parse_config("epochs = 3\nseed = 1\nepochs = 4\n")


def test_line_without_equals_rejected():
    with pytest.raises(FormatError, match=r"line 1.*key = value"):
        parse_config("this is not a config line\n")


def test_unparseable_value_names_key_and_line():
    with pytest.raises(FormatError, match=r"line 1.*epochs.*'three'"):
        parse_config("epochs = three\n")
    with pytest.raises(FormatError, match=r"line 1.*augment"):
        parse_config("augment = maybe\n")


def test_constraint_violations_surface_as_format_errors():
    with pytest.raises(FormatError, match="invalid configuration"):
        parse_config("epochs = 0\n")
    with pytest.raises(FormatError, match="invalid configuration"):
        parse_config("lr_start = 0.001\nlr_end = 0.01\n")


def test_constructor_validation():
    with pytest.raises(ValueError, match="epochs"):
        RunConfig(epochs=0)
    with pytest.raises(ValueError, match="lr_end"):
        RunConfig(lr_start=1e-5, lr_end=1e-4)
    with pytest.raises(ValueError, match="snr"):
        RunConfig(snr_min_db=10.0, snr_max_db=0.0)
    with pytest.raises(ValueError, match="speed"):
        RunConfig(speed_min=0.0)


def test_save_load_round_trip(tmp_path):
    cfg = RunConfig(
        n_mels=32,
        epochs=7,
        lr_start=3e-4,
        lr_end=3e-5,
        use_dynamics=False,
        augment=False,
        prune_pct=0.5,
        seed=99,
    )
    path = tmp_path / "run.cfg"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_dict_round_trip_covers_every_field():
    cfg = RunConfig(epochs=3, seed=5)
    data = cfg.to_dict()
    assert set(data) == {f.name for f in dataclasses.fields(RunConfig)}
    assert config_from_dict(data) == cfg


def test_dict_with_unknown_key_rejected():
    with pytest.raises(FormatError, match="unknown configuration keys"):
        config_from_dict({"epochs": 3, "bogus": 1})
