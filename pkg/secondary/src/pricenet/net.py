"""Pointer network over candidate columns.

Read: each column's 21 features map to a 128-d embedding through two fully
connected layers (one shared map for candidates and warm-start columns).
Process: an attention-based set encoder; a query vector attends over the
candidate embeddings for a fixed number of steps, so the encoding does not
depend on candidate order.
Write: a single-layer GRU pointer decoder. At every step the embeddings of
all columns currently in the master problem (warm start plus pointed ones)
are collapsed into one dynamic input by attention against a trained query;
that same vector doubles as the stop token the decoder may point to.

Pointing is over [stop] + candidates with an additive mask: already-pointed
candidates get -inf (probability exactly zero), stop is never masked, so
every decode halts within #candidates + 1 steps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .contract import FEATURE_COUNT

HIDDEN = 128
PROCESS_STEPS = 3

GREEDY = "greedy"
SAMPLE = "sample"


@dataclass
class DecodeResult:
    selected: tuple[int, ...]  # candidate indices in pointing order
    log_prob: torch.Tensor  # of the whole trajectory, final stop included
    steps: int


class PriceNet(nn.Module):
    def __init__(self, feature_count: int = FEATURE_COUNT, hidden: int = HIDDEN,
                 process_steps: int = PROCESS_STEPS):
        super().__init__()
        if hidden < 1 or process_steps < 1:
            raise ValueError("hidden and process_steps must be >= 1")
        self.feature_count = feature_count
        self.hidden = hidden
        self.process_steps = process_steps
        self.fc1 = nn.Linear(feature_count, hidden)
        self.fc2 = nn.Linear(hidden, hidden)
        self.process_cell = nn.GRUCell(hidden, hidden)
        self.write_cell = nn.GRUCell(hidden, hidden)
        self.w1 = nn.Linear(hidden, hidden, bias=False)
        self.w2 = nn.Linear(hidden, hidden, bias=False)
        self.v = nn.Parameter(torch.empty(hidden))
        self.h = nn.Parameter(torch.empty(hidden))  # dynamic-input query
        bound = 1.0 / hidden**0.5
        nn.init.uniform_(self.v, -bound, bound)
        nn.init.uniform_(self.h, -bound, bound)
        # raw-feature standardization travels with the parameters
        self.register_buffer("feat_mean", torch.zeros(feature_count))
        self.register_buffer("feat_std", torch.ones(feature_count))

    def set_scaler(self, mean, std) -> None:
        mean = torch.as_tensor(np.asarray(mean), dtype=torch.float32)
        std = torch.as_tensor(np.asarray(std), dtype=torch.float32)
        if mean.shape != (self.feature_count,) or std.shape != (self.feature_count,):
            raise ValueError("scaler shape mismatch")
        if not bool(torch.isfinite(mean).all()) or bool((std <= 0).any()):
            raise ValueError("scaler must be finite with positive std")
        self.feat_mean.copy_(mean)
        self.feat_std.copy_(std)

    def embed(self, features) -> torch.Tensor:
        """(n, feature_count) raw features -> (n, hidden) embeddings."""
        x = torch.as_tensor(np.asarray(features, dtype=np.float32))
        if x.ndim != 2 or x.shape[1] != self.feature_count:
            raise ValueError(f"expected (n, {self.feature_count}) features")
        if x.numel() and not bool(torch.isfinite(x).all()):
            raise ValueError("non-finite features")
        x = (x - self.feat_mean) / self.feat_std
        return self.fc2(torch.relu(self.fc1(x)))

    def process(self, cand_emb: torch.Tensor) -> torch.Tensor:
        """Set encoding of the candidates; initial hidden state of the Write
        block.  Empty candidate sets encode to the zero query."""
        query = cand_emb.new_zeros(1, self.hidden)
        if cand_emb.shape[0] == 0:
            return query
        for _ in range(self.process_steps):
            weights = torch.softmax(cand_emb @ query[0], dim=0)
            read = weights @ cand_emb
            query = self.process_cell(read.unsqueeze(0), query)
        return query

    def dynamic_input(self, sm: torch.Tensor) -> torch.Tensor:
        """Collapse the embeddings of everything in the master problem into
        one vector; also the stop token the pointer may select."""
        if sm.shape[0] == 0:
            return self.h.new_zeros(self.hidden)
        weights = torch.softmax(sm @ self.h, dim=0)
        return weights @ sm

    def pointer_logits(self, stop_emb: torch.Tensor, cand_emb: torch.Tensor,
                       d_t: torch.Tensor) -> torch.Tensor:
        """(N+1,) scores over [stop] + candidates."""
        options = torch.cat([stop_emb.unsqueeze(0), cand_emb], dim=0)
        return torch.tanh(self.w1(options) + self.w2(d_t)) @ self.v

    def decode(
        self,
        initial_emb: torch.Tensor,
        cand_emb: torch.Tensor,
        mode: str = GREEDY,
        generator: torch.Generator | None = None,
        trace: list | None = None,
    ) -> DecodeResult:
        """Point at candidates until the stop token is chosen.

        trace, when given, receives each step's probability vector (stop
        first) so callers can audit the mask.
        """
        if mode not in (GREEDY, SAMPLE):
            raise ValueError(f"unknown mode {mode!r}")
        n = cand_emb.shape[0]
        d_t = self.process(cand_emb)
        sm = initial_emb
        pointed: list[int] = []
        mask = torch.zeros(n + 1)
        log_prob = cand_emb.new_zeros(())
        steps = 0
        for _ in range(n + 1):
            steps += 1
            stop_emb = self.dynamic_input(sm)
            d_t = self.write_cell(stop_emb.unsqueeze(0), d_t)
            logits = self.pointer_logits(stop_emb, cand_emb, d_t[0]) + mask
            log_dist = torch.log_softmax(logits, dim=0)
            if trace is not None:
                trace.append(torch.softmax(logits, dim=0).detach())
            if mode == GREEDY:
                choice = int(torch.argmax(log_dist))
            else:
                probs = torch.softmax(logits, dim=0).detach()
                choice = int(torch.multinomial(probs, 1, generator=generator))
            log_prob = log_prob + log_dist[choice]
            if choice == 0:
                break
            pointed.append(choice - 1)
            mask[choice] = float("-inf")
            sm = torch.cat([sm, cand_emb[choice - 1].unsqueeze(0)], dim=0)
        return DecodeResult(tuple(pointed), log_prob, steps)
