"""Desk-scale testbed for loss-based membership inference on sparse
time-series forecasters and embedding-space augmentation defenses."""

from . import augment, cli, data, forecaster, metrics, runner, synth

__all__ = ["augment", "cli", "data", "forecaster", "metrics", "runner", "synth"]
__version__ = "0.1.0"
