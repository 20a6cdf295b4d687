"""
Configuration loader for YAML files.
"""

from pathlib import Path
from typing import Optional, Union
import yaml

from .schema import ChainConfig, FiberConfig, RunConfig
from .settings import settings


def load_config(config_path: Union[str, Path]) -> RunConfig:
    """
    Load and validate configuration from a YAML file.

    Args:
        config_path: Path to the YAML configuration file.

    Returns:
        Validated RunConfig object. An empty file yields the defaults.

    Raises:
        FileNotFoundError: If config file doesn't exist.
        yaml.YAMLError: If YAML parsing fails.
        pydantic.ValidationError: If config validation fails.
    """
    config_path = Path(config_path)

    if not config_path.exists():
        raise FileNotFoundError(f"Config file not found: {config_path}")

    with open(config_path, 'r') as f:
        raw_config = yaml.safe_load(f)

    if raw_config is None:
        raw_config = {}
    if not isinstance(raw_config, dict):
        raise ValueError(f"Config file must contain a mapping, got {type(raw_config).__name__}")

    return RunConfig(**raw_config)


def resolve_config(config_path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load the YAML file if given and fill unset seed, workers and cap from
    the FIBERMC_* environment.
    """
    run_config = load_config(config_path) if config_path else RunConfig()

    chain_env = {
        "seed": settings.SEED,
        "workers": settings.WORKERS,
    }
    chain_updates = {
        key: value for key, value in chain_env.items()
        if key not in run_config.chain.model_fields_set
    }
    fiber_updates = {}
    if "cap" not in run_config.fiber.model_fields_set:
        fiber_updates["cap"] = settings.FIBER_CAP

    return run_config.model_copy(update={
        "chain": ChainConfig(**{**run_config.chain.model_dump(), **chain_updates}),
        "fiber": FiberConfig(**{**run_config.fiber.model_dump(), **fiber_updates}),
    })
