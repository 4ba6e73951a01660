"""Size limits for exhaustive and dense computations.

``ROTORLAB_BUDGET`` overrides them: either a bare integer (enumeration
budget) or comma-separated ``name=value`` pairs, e.g. ``enum=1e8,dense=8192``.
"""
from __future__ import annotations

import os

DEFAULTS = {
    "enum": 10**7,  # product of degrees for enumerate_forests
    "det": 400,  # active vertices for the exact determinant
    "dense": 4096,  # active vertices for a dense Green's function solve
}


class BudgetExceeded(RuntimeError):
    pass


def budget(name: str) -> int:
    raw = os.environ.get("ROTORLAB_BUDGET", "").strip()
    values = dict(DEFAULTS)
    if raw:
        if "=" not in raw:
            values["enum"] = int(float(raw))
        else:
            for part in raw.split(","):
                key, _, val = part.partition("=")
                if key.strip() not in DEFAULTS:
                    raise ValueError(f"unknown budget {key.strip()!r}")
                values[key.strip()] = int(float(val))
    return values[name]
