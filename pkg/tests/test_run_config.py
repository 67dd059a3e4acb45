"""Tests for config-file loading and merging."""

import argparse
import json

import pytest

from src.config.run_config import COMMAND_DEFAULTS, load_run_config, merge_config
from src.config.settings import DEFAULT_ITERATIONS, DEFAULT_SAMPLER
from src.core.errors import ConfigError


def test_load_normalizes_dashes(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"skeleton-period": 7, "iters": 10}), encoding="utf-8")
    assert load_run_config(str(path)) == {"skeleton_period": 7, "iters": 10}


def test_load_rejects_non_objects(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_run_config(str(path))


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(str(tmp_path / "absent.json"))


def test_defaults_only():
    merged = merge_config("sample", None, argparse.Namespace())
    assert merged["iters"] == DEFAULT_ITERATIONS
    assert merged["sampler"] == DEFAULT_SAMPLER
    assert merged == COMMAND_DEFAULTS["sample"]


def test_flags_beat_file_beats_defaults():
    cli = argparse.Namespace(iters=30, sampler=None, seed=None)
    merged = merge_config("sample", {"iters": 10, "sampler": "single"}, cli)
    assert merged["iters"] == 30
    assert merged["sampler"] == "single"
    assert merged["seed"] == COMMAND_DEFAULTS["sample"]["seed"]


def test_false_flag_counts_as_given():
    merged = merge_config("sample", {"progress": True}, argparse.Namespace(progress=False))
    assert merged["progress"] is False


def test_unknown_keys_and_commands():
    with pytest.raises(ConfigError, match="unknown sample config keys"):
        merge_config("sample", {"iterations": 5}, argparse.Namespace())
    with pytest.raises(ConfigError):
        merge_config("plot", None, argparse.Namespace())


def test_defaults_are_not_shared():
    merged = merge_config("diagnose", {"burn_in": 5}, argparse.Namespace())
    assert merged["burn_in"] == 5
    assert COMMAND_DEFAULTS["diagnose"]["burn_in"] == 0
