"""Conformal and randomness e/p-predictors over finite example spaces."""

import json

from ._univconf import *  # noqa: F401,F403
from ._univconf import run_scenario_json


def run_scenario(name, seed=None, **params):
    """Run a harness scenario and return its report as a dict."""
    return json.loads(run_scenario_json(name, seed, {k: str(v) for k, v in params.items()}))
