"""Size caps for the exponential procedures.

Defaults can be overridden with ``BFCLAB_CAPS="dt_arity=6,cc_side=16"``.  Raising
a cap is unsafe: runtime and memory grow exponentially past the defaults.
"""

from __future__ import annotations

import os

DEFAULTS = {
    "dt_arity": 5,          # exact decision-tree search
    "bs_exact_arity": 4,    # block sensitivity guaranteed exact up to here
    "bs_arity": 12,         # best-effort block sensitivity up to here
    "lp_arity": 12,         # general approximation / witness LPs
    "symmetric_arity": 200,
    "v_family": 10 ** 6,    # |V(N, n)|
    "pattern_entries": 10 ** 7,
    "oracle_side": 512,
    "comm_entries": 1 << 24,
    "cc_side": 8,           # exact deterministic communication complexity
    "structure_side": 64,
    "hard_instance_k": 16,
    "shift_arity": 12,
    "chain_arity": 4,       # full chain report
}


class CapError(ValueError):
    """An input exceeds one of the configured size caps."""

    def __init__(self, cap: str, value, limit):
        super().__init__(f"cap '{cap}' exceeded: {value} > {limit}")
        self.cap = cap
        self.value = value
        self.limit = limit


def get(name: str) -> int:
    override = os.environ.get("BFCLAB_CAPS", "")
    for item in filter(None, (p.strip() for p in override.split(","))):
        key, _, val = item.partition("=")
        if key.strip() == name:
            return int(val)
    return DEFAULTS[name]


def check(name: str, value: int) -> None:
    limit = get(name)
    if value > limit:
        raise CapError(name, value, limit)
