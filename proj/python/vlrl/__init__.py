"""Latent-dynamics RL testbed with virtual-trajectory augmentation."""

from ._vlrl import (
    ConfigError,
    ContractError,
    GridWorld,
    IoError,
    PointMass,
    StepResult,
    derive_seed,
    evaluate_run,
    gradcheck,
    optimal_grid_return,
    train,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "GridWorld",
    "IoError",
    "PointMass",
    "StepResult",
    "derive_seed",
    "evaluate_run",
    "gradcheck",
    "optimal_grid_return",
    "train",
]
