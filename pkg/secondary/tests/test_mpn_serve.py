"""Bridge endpoint behaviour: one JSON line in, one JSON line out."""
from __future__ import annotations

import io
import json
import subprocess
import sys

import numpy as np
import pytest
import torch

from pricenet.model_io import save_model
from pricenet.net import PriceNet
from pricenet.serve import handle_line, parse_request, serve_forever


@pytest.fixture
def model():
    torch.manual_seed(31)
    net = PriceNet()
    net.eval()
    return net


def make_request(order_id="o1", n_candidates=4, n_initial=2, seed=0):
    rng = np.random.default_rng(seed)
    return {
        "order_id": order_id,
        "rhs": {"A": 2, "B": 1},
        "initial_column_ids": [f"w{i}" for i in range(n_initial)],
        "initial_columns": [
            {"id": f"w{i}", "features": rng.normal(size=21).round(4).tolist()}
            for i in range(n_initial)
        ],
        "candidates": [
            {"id": f"c{i}", "features": rng.normal(size=21).round(4).tolist()}
            for i in range(n_candidates)
        ],
    }


class TestParseRequest:
    def test_well_formed(self):
        inst = parse_request(json.dumps(make_request()))
        assert inst.order_id == "o1"
        assert inst.candidate_ids == ("c0", "c1", "c2", "c3")
        assert inst.initial_ids == ("w0", "w1")
        assert inst.candidates.shape == (4, 21)
        assert inst.label == frozenset()

    def test_initial_columns_optional(self):
        req = make_request()
        del req["initial_columns"]
        inst = parse_request(json.dumps(req))
        assert inst.initial.shape == (0, 21)

    @pytest.mark.parametrize(
        "mutate,needle",
        [
            (lambda r: r.pop("order_id"), "order_id"),
            (lambda r: r.pop("candidates"), "candidates"),
            (lambda r: r.update(order_id=7), "order_id"),
            (lambda r: r.update(candidates={"c0": []}), "list"),
            (lambda r: r["candidates"][0].pop("features"), "id and features"),
            (lambda r: r["candidates"][0].update(features=[0.0] * 20), "21"),
            (
                lambda r: r["candidates"][0]["features"].__setitem__(3, float("nan")),
                "finite",
            ),
        ],
    )
    def test_rejects_malformed(self, mutate, needle):
        req = make_request()
        mutate(req)
        with pytest.raises(ValueError, match=needle):
            parse_request(json.dumps(req))

    def test_rejects_non_json(self):
        with pytest.raises(ValueError, match="JSON"):
            parse_request("{not json")


class TestHandleLine:
    def test_selected_subset_of_candidates(self, model):
        reply = json.loads(handle_line(model, json.dumps(make_request())))
        assert reply["order_id"] == "o1"
        assert set(reply["selected"]) <= {"c0", "c1", "c2", "c3"}
        assert len(reply["selected"]) == len(set(reply["selected"]))

    def test_replay_is_identical(self, model):
        line = json.dumps(make_request(seed=3))
        assert handle_line(model, line) == handle_line(model, line)

    def test_empty_candidates_select_nothing(self, model):
        req = make_request(n_candidates=0)
        reply = json.loads(handle_line(model, json.dumps(req)))
        assert reply["selected"] == []

    def test_error_line_instead_of_raise(self, model):
        reply = json.loads(handle_line(model, "garbage"))
        assert "error" in reply
        assert "selected" not in reply


class TestServeForever:
    def run_serve(self, model, lines):
        out = io.StringIO()
        serve_forever(model, stdin=io.StringIO("".join(lines)), stdout=out)
        return out.getvalue().splitlines()

    def test_one_reply_per_request(self, model):
        lines = [json.dumps(make_request(order_id=f"o{i}", seed=i)) + "\n" for i in range(3)]
        replies = [json.loads(r) for r in self.run_serve(model, lines)]
        assert [r["order_id"] for r in replies] == ["o0", "o1", "o2"]

    def test_survives_bad_line_between_good_ones(self, model):
        lines = [
            json.dumps(make_request(order_id="first")) + "\n",
            "not json at all\n",
            json.dumps(make_request(order_id="second")) + "\n",
        ]
        replies = [json.loads(r) for r in self.run_serve(model, lines)]
        assert len(replies) == 3
        assert replies[0]["order_id"] == "first"
        assert "error" in replies[1]
        assert replies[2]["order_id"] == "second"

    def test_blank_lines_skipped(self, model):
        lines = ["\n", "  \n", json.dumps(make_request()) + "\n"]
        assert len(self.run_serve(model, lines)) == 1


class TestServeSubprocess:
    def test_round_trip(self, model, tmp_path):
        path = tmp_path / "net.pt"
        save_model(model, path)
        requests = "".join(
            json.dumps(make_request(order_id=f"o{i}", seed=i)) + "\n" for i in range(2)
        )
        proc = subprocess.run(
            [sys.executable, "-m", "pricenet.cli", "serve", "--model", str(path)],
            input=requests,
            capture_output=True,
            text=True,
            timeout=120,
        )
        assert proc.returncode == 0, proc.stderr
        replies = [json.loads(line) for line in proc.stdout.splitlines()]
        assert [r["order_id"] for r in replies] == ["o0", "o1"]
        for i, reply in enumerate(replies):
            expected = json.loads(
                handle_line(model, json.dumps(make_request(order_id=f"o{i}", seed=i)))
            )
            assert reply == expected
