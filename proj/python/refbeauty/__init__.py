# Copyright 2026 The refbeauty Authors
# SPDX-License-Identifier: Apache-2.0
"""Reference-guided face beautification with a controllable degree."""

# The extension links against the libtorch shared libraries shipped with the
# torch wheel; importing torch first puts them in the process.
import torch  # noqa: F401

from ._core import (
    ConfigError,
    Error,
    IoError,
    Model,
    NonFiniteLossError,
    NotReadyError,
    ShapeError,
    ValidationError,
    adain,
    gain_from_means,
    gain_from_scores,
    linspace_weights,
    mix_styles,
    split_regression,
    split_translation,
    train,
    weight_from_percent,
)

__all__ = [
    "ConfigError",
    "Error",
    "IoError",
    "Model",
    "NonFiniteLossError",
    "NotReadyError",
    "ShapeError",
    "ValidationError",
    "adain",
    "gain_from_means",
    "gain_from_scores",
    "linspace_weights",
    "mix_styles",
    "split_regression",
    "split_translation",
    "train",
    "weight_from_percent",
]
__version__ = "0.1.0"
