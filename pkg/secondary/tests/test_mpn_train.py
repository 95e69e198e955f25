"""Self-critic training loop: reward math, updates, checkpoints."""
from __future__ import annotations

import numpy as np
import pytest
import torch

from pricenet.data import Instance
from pricenet.model_io import load_model, save_model
from pricenet.net import GREEDY, SAMPLE, PriceNet
from pricenet.train import TrainResult, decode_ids, episode_loss, evaluate, f1_score, train_model

from mpn_refs import random_instance


@pytest.fixture
def model():
    torch.manual_seed(23)
    return PriceNet()


class TestF1:
    def test_both_empty_is_perfect(self):
        assert f1_score([], frozenset()) == 1.0

    def test_no_overlap_is_zero(self):
        assert f1_score([], {"a"}) == 0.0
        assert f1_score(["a"], set()) == 0.0
        assert f1_score(["a", "b"], {"c"}) == 0.0

    def test_partial_overlap(self):
        assert f1_score(["x", "y"], {"y", "z"}) == pytest.approx(0.5)

    def test_exact_match(self):
        assert f1_score(["a", "b"], {"b", "a"}) == 1.0

    def test_order_and_duplicates_ignored(self):
        assert f1_score(["b", "a", "a"], {"a", "b"}) == 1.0


class TestEpisodeLoss:
    def test_zero_advantage_gives_zero_loss(self, model):
        rng = np.random.default_rng(0)
        inst = random_instance(rng)
        gen = torch.Generator().manual_seed(1)
        loss, sampled = episode_loss(model, inst, gen, reward=lambda s, l: 0.7)
        assert loss.item() == 0.0
        assert sampled == 0.7

    def test_loss_sign_follows_advantage(self, model):
        # reward only non-greedy trajectories: positive advantage times a
        # negative log-probability must surface as a positive loss
        rng = np.random.default_rng(1)
        inst = random_instance(rng, max_candidates=5)
        greedy_ids, _ = decode_ids(model, inst, GREEDY)

        def reward(selected, label):
            return 0.0 if list(selected) == greedy_ids else 1.0

        for seed in range(20):
            gen = torch.Generator().manual_seed(seed)
            sampled_ids, _ = decode_ids(
                model, inst, SAMPLE, torch.Generator().manual_seed(seed)
            )
            if sampled_ids != greedy_ids:
                break
        else:
            pytest.fail("sampling never left the greedy trajectory")
        loss, sampled = episode_loss(model, inst, gen, reward=reward)
        assert sampled == 1.0
        assert loss.item() > 0.0
        assert loss.requires_grad


class TestTrainModel:
    def test_rejects_empty_and_candidateless(self, model):
        with pytest.raises(ValueError):
            train_model(model, [], epochs=1)
        bad = Instance(
            order_id="o",
            initial_ids=("w0",),
            initial=np.zeros((1, 21), dtype=np.float32),
            candidate_ids=(),
            candidates=np.zeros((0, 21), dtype=np.float32),
            label=frozenset(),
        )
        with pytest.raises(ValueError):
            train_model(model, [bad], epochs=1)

    def test_constant_reward_leaves_parameters_unchanged(self, model):
        rng = np.random.default_rng(3)
        insts = [random_instance(rng) for _ in range(6)]
        before = {k: v.clone() for k, v in model.named_parameters()}
        result = train_model(
            model, insts, epochs=2, batch_size=3, reward=lambda s, l: 0.7
        )
        for k, v in model.named_parameters():
            assert torch.equal(before[k], v), k
        assert result.reward_curve == pytest.approx([0.7, 0.7])
        assert result.eval_curve == []

    def test_scaler_fitted_from_training_data(self, model):
        rng = np.random.default_rng(4)
        insts = [random_instance(rng) for _ in range(5)]
        train_model(model, insts, epochs=1, reward=lambda s, l: 0.0)
        rows = np.vstack([m for i in insts for m in (i.candidates, i.initial)])
        assert np.allclose(model.feat_mean.numpy(), rows.mean(axis=0), atol=1e-5)

    def test_curves_and_determinism(self, model):
        rng = np.random.default_rng(5)
        insts = [random_instance(rng) for _ in range(8)]
        evals = [random_instance(rng) for _ in range(4)]
        result = train_model(
            model, insts, epochs=3, batch_size=4, seed=9, eval_instances=evals
        )
        assert isinstance(result, TrainResult)
        assert len(result.reward_curve) == 3
        assert len(result.eval_curve) == 3
        assert not model.training

        torch.manual_seed(23)
        twin = PriceNet()
        twin_result = train_model(
            twin, insts, epochs=3, batch_size=4, seed=9, eval_instances=evals
        )
        assert twin_result.reward_curve == result.reward_curve
        for a, b in zip(model.parameters(), twin.parameters()):
            assert torch.equal(a, b)

    def test_learns_lowest_first_feature(self, model):
        # label is always the candidate with the smallest first feature;
        # a short run at a larger step size must beat random selection
        rng = np.random.default_rng(6)
        insts = []
        for _ in range(30):
            n = 5
            feats = rng.normal(size=(n, 21)).astype(np.float32)
            ids = tuple(f"c{i}" for i in range(n))
            insts.append(
                Instance(
                    order_id=f"o{len(insts)}",
                    initial_ids=("w0", "w1"),
                    initial=rng.normal(size=(2, 21)).astype(np.float32),
                    candidate_ids=ids,
                    candidates=feats,
                    label=frozenset({ids[int(feats[:, 0].argmin())]}),
                )
            )
        before = evaluate(model, insts)
        result = train_model(model, insts, epochs=15, batch_size=10, lr=1e-2, seed=1)
        after = evaluate(model, insts)
        assert after > before
        assert after > 0.55
        assert result.reward_curve[-1] > result.reward_curve[0]


class TestEvaluate:
    def test_rejects_empty(self, model):
        with pytest.raises(ValueError):
            evaluate(model, [])

    def test_perfect_on_labels_equal_to_greedy_output(self, model):
        rng = np.random.default_rng(7)
        base = random_instance(rng, max_candidates=6)
        greedy_ids, _ = decode_ids(model, base, GREEDY)
        relabeled = Instance(
            order_id=base.order_id,
            initial_ids=base.initial_ids,
            initial=base.initial,
            candidate_ids=base.candidate_ids,
            candidates=base.candidates,
            label=frozenset(greedy_ids),
        )
        assert evaluate(model, [relabeled]) == 1.0

    def test_preserves_training_flag(self, model):
        rng = np.random.default_rng(8)
        model.train()
        evaluate(model, [random_instance(rng)])
        assert model.training
        model.eval()
        evaluate(model, [random_instance(rng)])
        assert not model.training


class TestCheckpoint:
    def test_roundtrip_preserves_greedy_behaviour(self, model, tmp_path):
        rng = np.random.default_rng(9)
        insts = [random_instance(rng) for _ in range(4)]
        train_model(model, insts, epochs=1, lr=1e-3, seed=2)
        path = tmp_path / "net.pt"
        save_model(model, path)
        loaded = load_model(path)
        assert not loaded.training
        for inst in insts:
            assert decode_ids(loaded, inst, GREEDY)[0] == decode_ids(model, inst, GREEDY)[0]
        for (ka, a), (kb, b) in zip(
            model.state_dict().items(), loaded.state_dict().items()
        ):
            assert ka == kb
            assert torch.equal(a, b)

    def test_rejects_other_format_version(self, model, tmp_path):
        path = tmp_path / "net.pt"
        save_model(model, path)
        blob = torch.load(path, weights_only=True)
        blob["format_version"] = 999
        torch.save(blob, path)
        with pytest.raises(ValueError, match="version"):
            load_model(path)

    def test_rejects_other_feature_layout(self, model, tmp_path):
        path = tmp_path / "net.pt"
        save_model(model, path)
        blob = torch.load(path, weights_only=True)
        blob["feature_checksum"] = "0" * 64
        torch.save(blob, path)
        with pytest.raises(ValueError, match="feature"):
            load_model(path)
