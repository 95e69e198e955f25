"""Per-column feature vectors for the learned pricing frontend.

Each candidate column is summarized by 21 numbers computed against one
order's demand and the duals of the master LP right after warm start (before
any column was admitted).  Stats over "support" use only items the column
actually covers; the coefficient, to-demand and dual*coefficient groups run
over every item of the order, with zeros where the column is silent.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import Column

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


def feature_order_checksum() -> str:
    """Fingerprint of the feature layout; model files must carry it so a
    stale predictor cannot be applied to reordered features."""
    return hashlib.sha256(",".join(FEATURE_NAMES).encode("utf-8")).hexdigest()


def _spread(values: Sequence[float]) -> tuple[float, float, float]:
    return (min(values), max(values), sum(values) / len(values))


@dataclass(frozen=True)
class FeatureVector:
    reduced_cost_iter0: float
    rhs_stats: tuple[float, float, float]
    dual_stats: tuple[float, float, float]
    coeff_stats: tuple[float, float, float, float]
    nonzero_coeff_stats: tuple[float, float, float]
    to_demand_stats: tuple[float, float, float, float]
    dual_times_coeff_stats: tuple[float, float, float]

    def to_list(self) -> list[float]:
        out = [
            self.reduced_cost_iter0,
            *self.rhs_stats,
            *self.dual_stats,
            *self.coeff_stats,
            *self.nonzero_coeff_stats,
            *self.to_demand_stats,
            *self.dual_times_coeff_stats,
        ]
        assert len(out) == FEATURE_COUNT
        return [float(v) for v in out]

    @staticmethod
    def from_list(values: Sequence[float]) -> "FeatureVector":
        if len(values) != FEATURE_COUNT:
            raise ValueError(f"expected {FEATURE_COUNT} features, got {len(values)}")
        v = [float(x) for x in values]
        return FeatureVector(
            reduced_cost_iter0=v[0],
            rhs_stats=tuple(v[1:4]),
            dual_stats=tuple(v[4:7]),
            coeff_stats=tuple(v[7:11]),
            nonzero_coeff_stats=tuple(v[11:14]),
            to_demand_stats=tuple(v[14:18]),
            dual_times_coeff_stats=tuple(v[18:21]),
        )


def extract_features(
    column: Column, rhs: Mapping[str, int], duals: Mapping[str, float]
) -> FeatureVector:
    """Build one column's feature vector.

    rhs must be the full demand of the order (every item, positive) and duals
    must carry one value per rhs item.  The column's coefficients may only
    touch rhs items.
    """
    items = list(rhs)
    if not items:
        raise ValueError("empty rhs")
    for t in column.coeffs:
        if t not in rhs:
            raise ValueError(f"column {column.id!r} covers {t!r}, not in rhs")
    coeff = {t: column.coeffs.get(t, 0) for t in items}
    support = [t for t in items if coeff[t] > 0]
    if not support:
        raise ValueError(f"column {column.id!r} has no positive coefficient")

    reduced = column.cost - sum(coeff[t] * duals[t] for t in items)
    all_coeffs = [float(coeff[t]) for t in items]
    support_coeffs = [float(coeff[t]) for t in support]
    to_demand = [float(rhs[t] - coeff[t]) for t in items]
    dual_coeff = [duals[t] * coeff[t] for t in items]
    return FeatureVector(
        reduced_cost_iter0=float(reduced),
        rhs_stats=_spread([float(rhs[t]) for t in support]),
        dual_stats=_spread([float(duals[t]) for t in support]),
        coeff_stats=(*_spread(all_coeffs), sum(all_coeffs)),
        nonzero_coeff_stats=(
            float(len(support_coeffs)),
            min(support_coeffs),
            sum(support_coeffs) / len(support_coeffs),
        ),
        to_demand_stats=(*_spread(to_demand), sum(to_demand)),
        dual_times_coeff_stats=_spread(dual_coeff),
    )


@dataclass(frozen=True)
class TrainingInstance:
    """One solved order, ready for the learned pricer.

    candidates carry the features of every column the solver could have
    admitted; label is the subset it actually admitted.  initial_columns
    describe the warm-start columns already sitting in the master problem
    (same ids as initial_column_ids, in the same sequence) so a predictor
    can embed them too.
    """

    order_id: str
    rhs: dict[str, int]
    initial_column_ids: list[str]
    initial_columns: list[tuple[str, FeatureVector]]
    candidates: list[tuple[str, FeatureVector]]
    label: set[str]

    def to_dict(self) -> dict:
        return {
            "order_id": self.order_id,
            "rhs": dict(sorted(self.rhs.items())),
            "initial_column_ids": list(self.initial_column_ids),
            "initial_columns": [
                {"id": cid, "features": fv.to_list()} for cid, fv in self.initial_columns
            ],
            "candidates": [
                {"id": cid, "features": fv.to_list()} for cid, fv in self.candidates
            ],
            "label": sorted(self.label),
        }

    @staticmethod
    def from_dict(raw: Mapping) -> "TrainingInstance":
        return TrainingInstance(
            order_id=str(raw["order_id"]),
            rhs={str(t): int(q) for t, q in raw["rhs"].items()},
            initial_column_ids=[str(c) for c in raw["initial_column_ids"]],
            initial_columns=[
                (str(c["id"]), FeatureVector.from_list(c["features"]))
                for c in raw.get("initial_columns", [])
            ],
            candidates=[
                (str(c["id"]), FeatureVector.from_list(c["features"]))
                for c in raw["candidates"]
            ],
            label=set(str(c) for c in raw["label"]),
        )
