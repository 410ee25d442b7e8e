"""Gibbs sampling with people over a synthesizer latent space.

Thin wrappers over the C++ core. Structured values come back as dicts.
"""

import json

from . import _core
from ._core import GspError

__all__ = [
    "GspError",
    "default_config",
    "normalize_config",
    "render",
    "extract_features",
    "jitter_ddp",
    "simulate",
    "replay",
    "analyze",
]


def _text(value):
    if value is None:
        return ""
    return value if isinstance(value, str) else json.dumps(value)


def default_config():
    return json.loads(_core.default_config())


def normalize_config(config):
    """Fills defaults and validates; raises GspError("config", msg, {"issues": [...]})."""
    return json.loads(_core.normalize_config(_text(config) or "{}"))


def render(weights, sentence_id="", config=None):
    """Returns (samples, sample_rate) for raw slider weights."""
    return _core.render(list(weights), sentence_id, _text(config))


def extract_features(samples, sample_rate):
    return json.loads(_core.extract_features(list(samples), int(sample_rate)))


def jitter_ddp(periods):
    return _core.jitter_ddp(list(periods))


def simulate(config=None, scenario=None):
    """Runs a closed-loop simulation. Returns (log_text, summary)."""
    log, summary = _core.simulate(_text(config), _text(scenario))
    return log, json.loads(summary)


def replay(log_text):
    return json.loads(_core.replay(log_text))


def analyze(log_text):
    return json.loads(_core.analyze(log_text))
