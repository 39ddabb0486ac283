"""Small argument-validation helpers shared across the package."""

from __future__ import annotations

from .model import Dataset

__all__ = ["check_positive", "check_unit_interval", "check_dataset"]


def check_positive(value: float, name: str) -> float:
    if not value > 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_unit_interval(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")
    return value


def check_dataset(ds: Dataset, name: str) -> Dataset:
    if len(ds) == 0:
        raise ValueError(f"{name} has no accounts")
    return ds
