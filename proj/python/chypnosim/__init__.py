"""Undervolting attack and countermeasure simulator."""

from ._chypnosim import (
    ConfigError,
    CoverageError,
    DeviceProfile,
    DeviceState,
    InvariantError,
    PreconditionError,
    RangeError,
    attack,
    classify_state,
    compute_snr,
    defend,
    hibernation_threshold,
    load_profile,
    modulation_safe,
    profile_document,
    race,
    recover_key_byte,
    run_cli,
    scan,
    select_pois,
)

__all__ = [
    "ConfigError",
    "CoverageError",
    "DeviceProfile",
    "DeviceState",
    "InvariantError",
    "PreconditionError",
    "RangeError",
    "attack",
    "classify_state",
    "compute_snr",
    "defend",
    "hibernation_threshold",
    "load_profile",
    "modulation_safe",
    "profile_document",
    "race",
    "recover_key_byte",
    "run_cli",
    "scan",
    "select_pois",
]
