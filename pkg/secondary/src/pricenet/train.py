"""Self-critic policy-gradient training with F1 reward.

Per episode the net decodes the same instance twice: once sampling, once
greedy with the same parameters. The sampled trajectory's log-probability is
weighted by how much the sample beat the greedy baseline, so the gradient is
-(F1(sampled) - F1(greedy)) * grad log p(sampled); a batch averages those
terms before one optimizer step.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch

from .data import Instance, Scaler
from .net import GREEDY, SAMPLE, PriceNet

BATCH_SIZE = 50
LEARNING_RATE = 1e-4


def f1_score(selected, label) -> float:
    selected, label = set(selected), set(label)
    if not selected and not label:
        return 1.0
    hit = len(selected & label)
    if hit == 0:
        return 0.0
    return 2.0 * hit / (len(selected) + len(label))


def decode_ids(
    model: PriceNet,
    instance: Instance,
    mode: str = GREEDY,
    generator: torch.Generator | None = None,
):
    """Run one decode; returns (selected ids in pointing order, result)."""
    initial = model.embed(instance.initial)
    candidates = model.embed(instance.candidates)
    result = model.decode(initial, candidates, mode=mode, generator=generator)
    return [instance.candidate_ids[i] for i in result.selected], result


def episode_loss(
    model: PriceNet,
    instance: Instance,
    generator: torch.Generator,
    reward=f1_score,
) -> tuple[torch.Tensor, float]:
    """One self-critic term; returns (loss contribution, sampled reward)."""
    with torch.no_grad():
        greedy_ids, _ = decode_ids(model, instance, GREEDY)
    sampled_ids, sampled = decode_ids(model, instance, SAMPLE, generator)
    sampled_reward = reward(sampled_ids, instance.label)
    advantage = sampled_reward - reward(greedy_ids, instance.label)
    return -advantage * sampled.log_prob, sampled_reward


@dataclass
class TrainResult:
    reward_curve: list[float]  # mean sampled reward per epoch
    eval_curve: list[float]  # mean greedy F1 per epoch on the eval split


def evaluate(model: PriceNet, instances: list[Instance]) -> float:
    """Mean greedy-decode F1 against the labels."""
    if not instances:
        raise ValueError("nothing to evaluate")
    was_training = model.training
    model.eval()
    with torch.no_grad():
        total = sum(
            f1_score(decode_ids(model, inst, GREEDY)[0], inst.label)
            for inst in instances
        )
    if was_training:
        model.train()
    return total / len(instances)


def train_model(
    model: PriceNet,
    instances: list[Instance],
    epochs: int,
    batch_size: int = BATCH_SIZE,
    lr: float = LEARNING_RATE,
    seed: int = 0,
    eval_instances: list[Instance] | None = None,
    reward=f1_score,
    log=None,
) -> TrainResult:
    if not instances:
        raise ValueError("no training instances")
    if any(len(inst.candidate_ids) == 0 for inst in instances):
        raise ValueError("training instances must have candidates")
    model.set_scaler(*_scaler_arrays(instances))
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    sampler = torch.Generator().manual_seed(seed)
    shuffler = torch.Generator().manual_seed(seed + 1)
    result = TrainResult([], [])
    model.train()
    for epoch in range(1, epochs + 1):
        order = torch.randperm(len(instances), generator=shuffler).tolist()
        rewards: list[float] = []
        for start in range(0, len(order), batch_size):
            batch = [instances[i] for i in order[start : start + batch_size]]
            loss = model.fc1.weight.new_zeros(())
            for instance in batch:
                term, sampled_reward = episode_loss(model, instance, sampler, reward)
                loss = loss + term
                rewards.append(sampled_reward)
            optimizer.zero_grad()
            (loss / len(batch)).backward()
            optimizer.step()
        result.reward_curve.append(sum(rewards) / len(rewards))
        if eval_instances:
            result.eval_curve.append(evaluate(model, eval_instances))
        if log is not None:
            line = f"epoch={epoch} reward={result.reward_curve[-1]:.4f}"
            if eval_instances:
                line += f" eval_f1={result.eval_curve[-1]:.4f}"
            log(line)
    model.eval()
    return result


def _scaler_arrays(instances: list[Instance]):
    scaler = Scaler.fit(instances)
    return scaler.mean, scaler.std
