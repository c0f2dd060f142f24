"""Contextual linear bandits with side information from partially observed offline logs."""

import csv
import io
import json

from ._sidebandit import *  # noqa: F401,F403
from ._sidebandit import preset_config as _preset_json, run_experiment_csv


def preset(name):
    return json.loads(_preset_json(name))


def run(config):
    """Runs a config (dict or JSON string) and returns the CSV rows as dicts."""
    text = config if isinstance(config, str) else json.dumps(config)
    return list(csv.DictReader(io.StringIO(run_experiment_csv(text))))
