"""Recurrent spiking networks with learnable axonal delays."""

from ._core import (
    ConfigError,
    Error,
    Model,
    ParseError,
    ShapeError,
    anneal,
    bench,
    count_recurrent_params,
    grad_check,
    load_binned,
    preset,
    spread,
    train,
    write_interval_task,
)

__all__ = [
    "ConfigError",
    "Error",
    "Model",
    "ParseError",
    "ShapeError",
    "anneal",
    "bench",
    "count_recurrent_params",
    "grad_check",
    "load_binned",
    "preset",
    "spread",
    "train",
    "write_interval_task",
]
