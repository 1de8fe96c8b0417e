"""Causal graphs, Lorentzian distance, and achronal structure on discretized
2d spacetimes.

The heavy lifting lives in the C++ extension ``causal_lab._core``; this
package re-exports it and adds a dict-friendly wrapper around the experiment
runner.
"""

import json as _json

from ._core import (
    CausalGraph,
    CausalLabError,
    check_flip,
    check_steepness,
    chronological_future,
    dual_potential,
    longest_path_distance,
    nearest_node,
    run_experiment,
    sample_graph,
    splitting_surface,
    time_function,
)

__all__ = [
    "CausalGraph",
    "CausalLabError",
    "check_flip",
    "check_steepness",
    "chronological_future",
    "dual_potential",
    "longest_path_distance",
    "nearest_node",
    "run",
    "run_experiment",
    "sample_graph",
    "splitting_surface",
    "time_function",
]

__version__ = "0.1.0"


def run(config):
    """Run an experiment config given as a dict.

    Returns (report, exit_code) where report is the parsed report document.
    Exit code 0 means every check passed, 2 means a check failed or a stage
    errored, 3 means some check was inconclusive.
    """
    doc, exit_code = run_experiment(_json.dumps(config))
    return _json.loads(doc), exit_code
