"""Bit-accurate multi-format MAC unit model."""

import json

from . import _jackmac
from ._jackmac import decode, encode

__all__ = ["encode", "decode", "mac", "verify", "simulate", "structure_report"]


def mac(mode, x, w, acc=None, ex=None, ey=None):
    """One MAC invocation on raw codes; returns the result dump as a dict."""
    return json.loads(_jackmac.mac_json(mode, list(x), list(w), acc, ex, ey))


def verify(suite, trials=10000, seed=1):
    return json.loads(_jackmac.verify_json(suite, trials, seed))


def simulate(workload, config=None):
    return json.loads(_jackmac.simulate_json(json.dumps(workload), json.dumps(config) if config else ""))


def structure_report(grouping="grouped", lanes=16):
    return json.loads(_jackmac.structure_json(grouping, lanes))
