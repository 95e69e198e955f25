"""Bridge endpoint: one greedy decode per request line.

Strictly sequential, one request in flight. A malformed request produces an
error response line and the loop continues; the process never dies on bad
input, only on EOF.
"""
from __future__ import annotations

import json
import sys

import numpy as np
import torch

from .contract import FEATURE_COUNT
from .data import Instance
from .net import PriceNet
from .train import decode_ids


def _feature_rows(records, field) -> tuple[tuple[str, ...], np.ndarray]:
    if not isinstance(records, list):
        raise ValueError(f"{field} must be a list")
    ids = []
    rows = []
    for rec in records:
        if not isinstance(rec, dict) or "id" not in rec or "features" not in rec:
            raise ValueError(f"{field} entries need id and features")
        feats = rec["features"]
        if not isinstance(feats, list) or len(feats) != FEATURE_COUNT:
            raise ValueError(f"{field} features must list {FEATURE_COUNT} numbers")
        ids.append(str(rec["id"]))
        rows.append([float(v) for v in feats])
    matrix = np.asarray(rows, dtype=np.float32).reshape(len(ids), FEATURE_COUNT)
    if not np.isfinite(matrix).all():
        raise ValueError(f"{field} features must be finite")
    return tuple(ids), matrix


def parse_request(line: str) -> Instance:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"request is not JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ValueError("request is not an object")
    order_id = raw.get("order_id")
    if not isinstance(order_id, str):
        raise ValueError("request needs a string order_id")
    if "candidates" not in raw:
        raise ValueError("request needs candidates")
    initial_ids, initial = _feature_rows(raw.get("initial_columns", []), "initial_columns")
    candidate_ids, candidates = _feature_rows(raw["candidates"], "candidates")
    return Instance(
        order_id=order_id,
        initial_ids=initial_ids,
        initial=initial,
        candidate_ids=candidate_ids,
        candidates=candidates,
        label=frozenset(),
    )


def handle_line(model: PriceNet, line: str) -> str:
    """One request line in, one response line out (never raises)."""
    try:
        instance = parse_request(line)
    except ValueError as exc:
        return json.dumps({"error": str(exc)}, sort_keys=True)
    if instance.candidate_ids:
        with torch.no_grad():
            selected, _ = decode_ids(model, instance)
    else:
        selected = []
    return json.dumps(
        {"order_id": instance.order_id, "selected": selected}, sort_keys=True
    )


def serve_forever(model: PriceNet, stdin=None, stdout=None) -> None:
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    model.eval()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(handle_line(model, line) + "\n")
        stdout.flush()
