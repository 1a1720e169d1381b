"""Python bindings for the pinnfm training and analysis library."""

import json
from pathlib import Path

from ._core import (
    ConfigError,
    DomainError,
    NetworkParams,
    PdeProblem,
    condition_estimate,
    forward,
    forward_batch,
    forward_jet,
    pinn_loss,
    reference_grid,
)
from ._core import run_experiment as _run_experiment

__all__ = [
    "ConfigError",
    "DomainError",
    "NetworkParams",
    "PdeProblem",
    "condition_estimate",
    "forward",
    "forward_batch",
    "forward_jet",
    "pinn_loss",
    "reference_grid",
    "run_experiment",
]


def run_experiment(config):
    """Runs an experiment from a config dict; returns (exit_code, run_dir, summary)."""
    code, run_dir = _run_experiment(json.dumps(config))
    run_dir = Path(run_dir)
    summary_path = run_dir / "summary.json"
    summary = json.loads(summary_path.read_text()) if summary_path.exists() else None
    return code, run_dir, summary
