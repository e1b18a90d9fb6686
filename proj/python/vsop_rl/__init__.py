"""Python front end for the vsop C++ engine."""

from ._vsop import (
    ConfigError,
    Env,
    TrainConfig,
    check_theorem,
    gae,
    load_config,
    policy_values,
    preset,
    preset_names,
    read_checkpoint,
    suite_names,
    train,
    verify,
)


def configure(name=None, **overrides):
    """Preset (or defaults) with keyword overrides applied as text values."""
    config = preset(name) if name else TrainConfig()
    for key, value in overrides.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        config.set(key, str(value))
    config.validate()
    return config


__all__ = [
    "ConfigError",
    "Env",
    "TrainConfig",
    "check_theorem",
    "configure",
    "gae",
    "load_config",
    "policy_values",
    "preset",
    "preset_names",
    "read_checkpoint",
    "suite_names",
    "train",
    "verify",
]
