"""Gait activity recognition from magnetic tracking and IMU data."""

import json

from ._core import (
    Dataset,
    GaitmagError,
    Model,
    build_dataset,
    euler_to_quat,
    forward_field,
    gen_cohort,
    invert_field,
    load_dataset,
    load_model,
    lowpass,
    predict,
    quat_to_euler,
    roc_auc,
    save_dataset,
    save_model,
    track,
    train,
)
from . import _core

ACTIVITIES = ("J", "M", "W", "WW")


def evaluate(model, dataset):
    """Test-split metrics of one model as a dict."""
    return json.loads(_core.evaluate_json(model, dataset))


def repeated_runs(dataset, **kwargs):
    """Train and score `runs` models with seeds seed..seed+runs-1; returns the report dict."""
    return json.loads(_core.repeated_runs_json(dataset, **kwargs))


__all__ = [
    "ACTIVITIES",
    "Dataset",
    "GaitmagError",
    "Model",
    "build_dataset",
    "euler_to_quat",
    "evaluate",
    "forward_field",
    "gen_cohort",
    "invert_field",
    "load_dataset",
    "load_model",
    "lowpass",
    "predict",
    "quat_to_euler",
    "repeated_runs",
    "roc_auc",
    "save_dataset",
    "save_model",
    "track",
    "train",
]
