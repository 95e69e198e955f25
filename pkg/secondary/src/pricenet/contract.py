"""Wire contract shared with the solver.

The feature layout is fixed by the emitter; this copy exists so the model
file can prove which layout it was trained on without importing the solver
package. The checksum formula must match the emitter's byte for byte.
"""
from __future__ import annotations

import hashlib

FEATURE_NAMES = (
    "reduced_cost_iter0",
    "rhs_min", "rhs_max", "rhs_mean",
    "dual_min", "dual_max", "dual_mean",
    "coeff_min", "coeff_max", "coeff_mean", "coeff_sum",
    "nonzero_count", "nonzero_min", "nonzero_mean",
    "to_demand_min", "to_demand_max", "to_demand_mean", "to_demand_sum",
    "dual_coeff_min", "dual_coeff_max", "dual_coeff_mean",
)
FEATURE_COUNT = len(FEATURE_NAMES)

MODEL_FORMAT_VERSION = 1


def feature_order_checksum() -> str:
    return hashlib.sha256(",".join(FEATURE_NAMES).encode("utf-8")).hexdigest()
