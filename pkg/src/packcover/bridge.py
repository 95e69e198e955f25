"""Line-delimited JSON bridge to an external column predictor.

The predictor is any subprocess that reads one request per line on stdin and
writes one response per line on stdout.  Request:

    {"order_id": ..., "rhs": {item: qty, ...},
     "initial_column_ids": [...],
     "initial_columns": [{"id": ..., "features": [21 floats]}, ...],
     "candidates": [{"id": ..., "features": [21 floats]}, ...]}

initial_columns carries the warm-start columns with the same features the
training file emits for them, so a predictor can embed the current master
problem, not just the candidates.

Response:

    {"order_id": ..., "selected": [candidate ids]}

One request is in flight at a time.  A malformed or mismatched response is
rejected whole (never partially applied) and the subprocess is restarted
before the next request, so one bad exchange cannot poison the stream.
"""
from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from typing import Iterable, Mapping, Sequence

DEFAULT_TIMEOUT = 30.0


class PredictorError(RuntimeError):
    """The predictor broke protocol: bad JSON, wrong id, unknown columns."""


class PredictorTimeout(PredictorError):
    """No response line within the per-request timeout."""


def build_request(
    order_id: str,
    rhs: Mapping[str, int],
    initial_columns: Sequence[tuple[str, Sequence[float]]],
    candidates: Sequence[tuple[str, Sequence[float]]],
) -> dict:
    def as_records(pairs):
        return [
            {"id": cid, "features": [float(v) for v in feats]}
            for cid, feats in pairs
        ]

    return {
        "order_id": order_id,
        "rhs": dict(sorted(rhs.items())),
        "initial_column_ids": [cid for cid, _ in initial_columns],
        "initial_columns": as_records(initial_columns),
        "candidates": as_records(candidates),
    }


def parse_response(line: str, order_id: str, candidate_ids: set[str]) -> list[str]:
    """Validate one response line; returns the selected ids, deduplicated.

    Anything off-contract raises PredictorError: the caller must treat the
    whole response as unusable rather than salvage parts of it.
    """
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise PredictorError(f"response is not JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise PredictorError("response is not an object")
    if raw.get("order_id") != order_id:
        raise PredictorError(
            f"response order_id {raw.get('order_id')!r} != request {order_id!r}"
        )
    selected = raw.get("selected")
    if not isinstance(selected, list):
        raise PredictorError("response field 'selected' must be a list")
    out: list[str] = []
    seen: set[str] = set()
    for cid in selected:
        if not isinstance(cid, str):
            raise PredictorError(f"selected id {cid!r} is not a string")
        if cid not in candidate_ids:
            raise PredictorError(f"selected id {cid!r} is not a candidate")
        if cid not in seen:
            seen.add(cid)
            out.append(cid)
    return out


class PredictorClient:
    """Owns the predictor subprocess and the request/response discipline."""

    def __init__(self, command: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        self._argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self._argv:
            raise ValueError("empty predictor command")
        self.timeout = timeout
        self._lock = threading.Lock()
        self._proc: subprocess.Popen | None = None
        self._lines: queue.Queue | None = None

    def _start(self) -> None:
        self._proc = subprocess.Popen(
            self._argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        lines: queue.Queue = queue.Queue()
        self._lines = lines

        def pump(stream):
            for line in stream:
                lines.put(line)
            lines.put(None)

        threading.Thread(target=pump, args=(self._proc.stdout,), daemon=True).start()

    def _stop(self) -> None:
        proc, self._proc, self._lines = self._proc, None, None
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.terminate()
            proc.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def request(
        self,
        order_id: str,
        rhs: Mapping[str, int],
        initial_columns: Sequence[tuple[str, Sequence[float]]],
        candidates: Sequence[tuple[str, Sequence[float]]],
    ) -> list[str]:
        """Send one request, wait for its response, return the selected ids.

        Raises PredictorTimeout / PredictorError; after either, the subprocess
        is torn down and relaunched on the next call.
        """
        payload = json.dumps(
            build_request(order_id, rhs, initial_columns, candidates),
            sort_keys=True,
        )
        with self._lock:
            if self._proc is None or self._proc.poll() is not None:
                self._stop()
                self._start()
            try:
                self._proc.stdin.write(payload + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                self._stop()
                raise PredictorError("predictor process is gone") from exc
            try:
                line = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                self._stop()
                raise PredictorTimeout(
                    f"no response for {order_id!r} within {self.timeout}s"
                ) from None
            if line is None:
                self._stop()
                raise PredictorError("predictor closed its output stream")
            try:
                return parse_response(line, order_id, {cid for cid, _ in candidates})
            except PredictorError:
                self._stop()
                raise

    def close(self) -> None:
        with self._lock:
            self._stop()

    def __enter__(self) -> "PredictorClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
