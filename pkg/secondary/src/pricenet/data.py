"""Training instances and feature scaling.

The input file is the solver's training JSONL: one solved order per line
with warm-start columns, candidate columns (both as raw 21-feature vectors),
and the label ids the solver's pricing loop admitted.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass

import numpy as np

from .contract import FEATURE_COUNT


@dataclass(frozen=True)
class Instance:
    order_id: str
    initial_ids: tuple[str, ...]
    initial: np.ndarray  # (M, FEATURE_COUNT), M may be 0
    candidate_ids: tuple[str, ...]
    candidates: np.ndarray  # (N, FEATURE_COUNT)
    label: frozenset[str]


def _feature_matrix(records, path, line_no, field) -> tuple[tuple[str, ...], np.ndarray]:
    ids = []
    rows = []
    for rec in records:
        feats = rec["features"]
        if len(feats) != FEATURE_COUNT:
            raise ValueError(
                f"{path}: line {line_no}: {field} entry has {len(feats)} features, "
                f"expected {FEATURE_COUNT}"
            )
        ids.append(str(rec["id"]))
        rows.append(feats)
    matrix = np.asarray(rows, dtype=np.float32).reshape(len(ids), FEATURE_COUNT)
    if not np.isfinite(matrix).all():
        raise ValueError(f"{path}: line {line_no}: non-finite {field} features")
    return tuple(ids), matrix


def load_instances(path) -> list[Instance]:
    out: list[Instance] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {line_no}: invalid JSON ({exc.msg})") from exc
            try:
                initial_ids, initial = _feature_matrix(
                    raw.get("initial_columns", []), path, line_no, "initial"
                )
                candidate_ids, candidates = _feature_matrix(
                    raw["candidates"], path, line_no, "candidate"
                )
                inst = Instance(
                    order_id=str(raw["order_id"]),
                    initial_ids=initial_ids,
                    initial=initial,
                    candidate_ids=candidate_ids,
                    candidates=candidates,
                    label=frozenset(str(c) for c in raw["label"]),
                )
            except KeyError as exc:
                raise ValueError(f"{path}: line {line_no}: missing field {exc}") from exc
            unknown = inst.label - set(inst.candidate_ids)
            if unknown:
                raise ValueError(
                    f"{path}: line {line_no}: label id {sorted(unknown)[0]!r} "
                    "is not a candidate"
                )
            out.append(inst)
    return out


def split_train_eval(
    instances: list[Instance], n_train: int, n_eval: int, seed: int = 0
) -> tuple[list[Instance], list[Instance]]:
    if n_train + n_eval > len(instances):
        raise ValueError(
            f"need {n_train + n_eval} instances, have {len(instances)}"
        )
    pool = list(instances)
    random.Random(seed).shuffle(pool)
    return pool[:n_train], pool[n_train : n_train + n_eval]


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardization fitted on the training corpus.

    Stored inside the model file so serve time applies exactly the training
    transform; the wire format stays raw features.
    """

    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def fit(instances: list[Instance]) -> "Scaler":
        rows = [inst.candidates for inst in instances if len(inst.candidate_ids)]
        rows += [inst.initial for inst in instances if len(inst.initial_ids)]
        if not rows:
            raise ValueError("no feature rows to fit on")
        stacked = np.concatenate(rows, axis=0)
        mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        std[std < 1e-6] = 1.0  # constant features pass through unscaled
        return Scaler(mean.astype(np.float32), std.astype(np.float32))

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.mean) / self.std
