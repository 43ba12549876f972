"""Python bindings for the snnprune library."""

from ._snnprune import (
    CheckpointError,
    ConfigError,
    ContractError,
    DatasetError,
    DegenerateInputError,
    DivergenceError,
    EnergyParams,
    ExperimentConfig,
    LifParams,
    Network,
    UpdateCountMode,
    average_power,
    energy_per_timestep,
    evaluate,
    lif_membrane_update,
    make_snn3,
    pretrain,
    prune,
    r_squared,
    sha256_hex,
    synth,
)

__all__ = [name for name in dir() if not name.startswith("_")]
