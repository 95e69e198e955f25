"""Checkpoint format: one file, self-describing.

The file refuses to load if it was written by a different format version or
against a different feature layout, so a stale model can never be applied to
reordered features.
"""
from __future__ import annotations

import torch

from .contract import FEATURE_NAMES, MODEL_FORMAT_VERSION, feature_order_checksum
from .net import PriceNet


def save_model(model: PriceNet, path) -> None:
    torch.save(
        {
            "format_version": MODEL_FORMAT_VERSION,
            "feature_checksum": feature_order_checksum(),
            "feature_names": list(FEATURE_NAMES),
            "hidden": model.hidden,
            "process_steps": model.process_steps,
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_model(path) -> PriceNet:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    version = blob.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"model format version {version!r}, this build reads {MODEL_FORMAT_VERSION}"
        )
    checksum = blob.get("feature_checksum")
    if checksum != feature_order_checksum():
        raise ValueError(
            "model was trained on a different feature layout "
            f"({checksum!r} != {feature_order_checksum()!r})"
        )
    model = PriceNet(hidden=blob["hidden"], process_steps=blob["process_steps"])
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model
