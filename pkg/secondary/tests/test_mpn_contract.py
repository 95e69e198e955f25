"""The wire contract both sides must agree on, checked without imports."""
from __future__ import annotations

import subprocess
import sys

from pricenet.contract import FEATURE_COUNT, FEATURE_NAMES, feature_order_checksum


def test_feature_count():
    assert FEATURE_COUNT == 21
    assert len(FEATURE_NAMES) == 21
    assert len(set(FEATURE_NAMES)) == 21


def test_checksum_is_stable():
    assert feature_order_checksum() == (
        "e5aa3cccbf83e5f01d7c9cd7a67e0f673274422451cbe7c8d01a3d214bd0c88b"
    )


def test_checksum_matches_solver_package():
    # the solver package is a separate install; compare through a fresh
    # interpreter so this suite never imports it
    proc = subprocess.run(
        [
            sys.executable,
            "-c",
            "from packcover.features import feature_order_checksum;"
            "print(feature_order_checksum())",
        ],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.strip() == feature_order_checksum()
