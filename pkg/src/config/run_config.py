"""
Run configuration files.

A JSON config file supplies values for a command; flags given explicitly
on the command line win over the file, and the file wins over the defaults
from settings.
"""

import argparse
import logging
from typing import Any, Dict, Mapping, Optional

from src.config.settings import (
    DEFAULT_ACF_MAX_LAG,
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_BURN_IN,
    DEFAULT_DELTA,
    DEFAULT_ITERATIONS,
    DEFAULT_PRIOR,
    DEFAULT_SAMPLER,
    DEFAULT_SEED,
    DEFAULT_SIM_MAX_LAG,
    DEFAULT_SIM_N,
    DEFAULT_SIM_P,
    DEFAULT_SIM_RHO,
    DEFAULT_SIM_SIGMA2,
    DEFAULT_SKELETON_PERIOD,
)
from src.core.errors import ConfigError, DataError
from src.utils.file_utils import read_json

logger = logging.getLogger(__name__)

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "simulate": {
        "p": DEFAULT_SIM_P,
        "max_lag": DEFAULT_SIM_MAX_LAG,
        "rho": DEFAULT_SIM_RHO,
        "sigma2": DEFAULT_SIM_SIGMA2,
        "n": DEFAULT_SIM_N,
        "seed": DEFAULT_SEED,
        "out": None,
    },
    "sample": {
        "data": None,
        "skip_header": False,
        "out": None,
        "sampler": DEFAULT_SAMPLER,
        "iters": DEFAULT_ITERATIONS,
        "prior": DEFAULT_PRIOR,
        "alpha": DEFAULT_ALPHA,
        "beta": DEFAULT_BETA,
        "delta": DEFAULT_DELTA,
        "skeleton_period": DEFAULT_SKELETON_PERIOD,
        "snapshot_every": None,
        "seed": DEFAULT_SEED,
        "chains": 1,
        "resume": None,
        "debug": False,
        "progress": True,
    },
    "diagnose": {
        "trace": None,
        "out": None,
        "burn_in": DEFAULT_BURN_IN,
        "max_lag": None,
        "truth": None,
    },
}


def load_run_config(path: str) -> Dict[str, Any]:
    """
    Read a JSON object of settings.

    Raises:
        ConfigError: if the file is unreadable or not a JSON object
    """
    try:
        data = read_json(path)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def merge_config(
    command: str, file_cfg: Optional[Mapping[str, Any]], cli_args: argparse.Namespace
) -> Dict[str, Any]:
    """
    Layer defaults, file values and explicitly given flags for `command`.

    Flags count as given when their parsed value is not None.

    Raises:
        ConfigError: for unknown commands or config keys
    """
    if command not in COMMAND_DEFAULTS:
        raise ConfigError(f"unknown command '{command}'")
    merged = dict(COMMAND_DEFAULTS[command])
    if file_cfg:
        unknown = sorted(set(file_cfg) - set(merged))
        if unknown:
            raise ConfigError(f"unknown {command} config keys: {', '.join(unknown)}")
        merged.update(file_cfg)
    for key in merged:
        value = getattr(cli_args, key, None)
        if value is not None:
            merged[key] = value
    logger.debug("Resolved %s config: %s", command, merged)
    return merged
