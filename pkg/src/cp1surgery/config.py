"""Numerical tolerances and enumeration caps.

A single Config travels through every entry point.  Defaults are chosen so
that double precision leaves two orders of magnitude of headroom between
tau_alg (algebraic identities) and tau_sep (geometric separations).
"""

from __future__ import annotations

import dataclasses
import json
import os


@dataclasses.dataclass(frozen=True)
class Config:
    tau_alg: float = 1e-9        # matrix identities, endpoint residuals
    tau_sep: float = 1e-6        # minimal allowed distance between disjoint pieces
    epsilon_cap: float = 0.05    # collar half-widths never exceed this
    ball_disc: int = 6           # word-length ball for discreteness-style sanity checks
    ball_disjoint: int = 6       # word-length ball for simplicity and disjointness tests
    ball_cap: int = 8            # hard cap on any requested ball radius
    ball_count_cap: int = 4_000_000  # hard cap on enumerated ball size
    max_subdiv: int = 20         # refinement depth for the sampling oracle
    verify: bool = True          # run independent oracles after each surgery

    def replace(self, **kw) -> "Config":
        return dataclasses.replace(self, **kw)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(Config)}


def load_config(path: str | None = None, overrides: dict | None = None) -> Config:
    """Build a Config from defaults, an optional JSON file, and overrides.

    When path is None the CP1_CONFIG environment variable is consulted.
    Unknown keys are rejected so typos do not silently keep defaults.
    """
    if path is None:
        path = os.environ.get("CP1_CONFIG")
    values: dict = {}
    if path:
        with open(path) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {path!r} must hold a JSON object")
        values.update(loaded)
    if overrides:
        values.update(overrides)
    bad = set(values) - set(_FIELD_TYPES)
    if bad:
        raise ValueError(f"unknown config keys: {sorted(bad)}")
    return Config(**values)


DEFAULT = Config()
