"""Character-level encoder-decoder with bilinear attention, optionally with a copy gate.

Both variants share the same network: an embedding table, a single-layer
bidirectional GRU encoder, a GRU decoder fed the previous symbol and the
previous context vector, and bilinear attention.  The pointer-generator adds
a scalar gate mixing the output softmax with the attention distribution
scattered onto the source symbols.
"""

from __future__ import annotations

import torch
import torch.nn as nn
from torch.nn.utils.rnn import pack_padded_sequence, pad_packed_sequence

from .vocab import BOS_ID, EOS_ID, PAD_ID

ENCDEC = "encdec"
POINTER = "pointer"
MODEL_KINDS = (ENCDEC, POINTER)


def pointer_mix(p_gen, vocab_dist, attention, source_ids):
    """``p_gen * vocab_dist + (1 - p_gen) * copy_dist``.

    Shapes: ``p_gen`` [B, 1], ``vocab_dist`` [B, V], ``attention`` [B, S],
    ``source_ids`` [B, S] (long).  The copy distribution sums the attention
    over source positions holding the same symbol.
    """
    copy = torch.zeros_like(vocab_dist).scatter_add_(1, source_ids, attention)
    return p_gen * vocab_dist + (1.0 - p_gen) * copy


class InflectionModel(nn.Module):
    def __init__(self, vocab_size: int, embedding: int = 64, hidden: int = 128, pointer: bool = False):
        super().__init__()
        self.vocab_size = vocab_size
        self.pointer = pointer
        self.embed = nn.Embedding(vocab_size, embedding, padding_idx=PAD_ID)
        self.encoder = nn.GRU(embedding, hidden, batch_first=True, bidirectional=True)
        self.bridge = nn.Linear(2 * hidden, hidden)
        self.decoder = nn.GRUCell(embedding + 2 * hidden, hidden)
        self.attn = nn.Linear(2 * hidden, hidden, bias=False)
        self.combine = nn.Linear(hidden + 2 * hidden, hidden)
        self.out = nn.Linear(hidden, vocab_size)
        if pointer:
            self.gate = nn.Linear(hidden + 2 * hidden + embedding, 1)

    @property
    def kind(self) -> str:
        return POINTER if self.pointer else ENCDEC

    def n_params(self) -> int:
        return sum(p.numel() for p in self.parameters())

    # -- pieces ---------------------------------------------------------

    def encode(self, src, lengths):
        emb = self.embed(src)
        packed = pack_padded_sequence(emb, lengths.cpu(), batch_first=True, enforce_sorted=False)
        out, last = self.encoder(packed)
        enc, _ = pad_packed_sequence(out, batch_first=True, total_length=src.size(1))
        h0 = torch.tanh(self.bridge(torch.cat([last[0], last[1]], dim=-1)))
        mask = src != PAD_ID
        return enc, self.attn(enc), mask, h0

    def step(self, prev, h, ctx, enc, keys, mask, src):
        """One decoder step; returns (distribution, h, ctx)."""
        emb = self.embed(prev)
        h = self.decoder(torch.cat([emb, ctx], dim=-1), h)
        scores = torch.bmm(keys, h.unsqueeze(2)).squeeze(2)
        scores = scores.masked_fill(~mask, float("-inf"))
        attention = torch.softmax(scores, dim=-1)
        ctx = torch.bmm(attention.unsqueeze(1), enc).squeeze(1)
        hidden = torch.tanh(self.combine(torch.cat([h, ctx], dim=-1)))
        dist = torch.softmax(self.out(hidden), dim=-1)
        if self.pointer:
            p_gen = torch.sigmoid(self.gate(torch.cat([h, ctx, emb], dim=-1)))
            dist = pointer_mix(p_gen, dist, attention, src)
        return dist, h, ctx

    # -- whole sequences --------------------------------------------------

    def forward(self, src, lengths, tgt_in):
        """Teacher-forced per-step distributions, shape [B, T, V]."""
        enc, keys, mask, h = self.encode(src, lengths)
        ctx = enc.new_zeros(src.size(0), enc.size(2))
        dists = []
        for t in range(tgt_in.size(1)):
            dist, h, ctx = self.step(tgt_in[:, t], h, ctx, enc, keys, mask, src)
            dists.append(dist)
        return torch.stack(dists, dim=1)

    def loss(self, src, lengths, tgt_in, tgt_out, reduction: str = "mean"):
        """Negative log-likelihood per target symbol (mean) or summed."""
        dists = self.forward(src, lengths, tgt_in)
        probs = dists.gather(2, tgt_out.unsqueeze(2)).squeeze(2)
        mask = tgt_out != PAD_ID
        # Padding positions contribute log(1) = 0.
        nll = -torch.log(torch.where(mask, probs, torch.ones_like(probs))).sum()
        if reduction == "sum":
            return nll
        return nll / mask.sum()

    @torch.no_grad()
    def greedy(self, src, lengths, max_len: int):
        """Greedy decoding; returns (list of id lists, list of truncated flags)."""
        batch = src.size(0)
        outputs = [[] for _ in range(batch)]
        done = [False] * batch
        if max_len <= 0:
            return outputs, [True] * batch
        enc, keys, mask, h = self.encode(src, lengths)
        ctx = enc.new_zeros(batch, enc.size(2))
        prev = torch.full((batch,), BOS_ID, dtype=torch.long)
        for _ in range(max_len):
            dist, h, ctx = self.step(prev, h, ctx, enc, keys, mask, src)
            prev = dist.argmax(dim=-1)  # first maximal index on ties
            for b, sym in enumerate(prev.tolist()):
                if done[b]:
                    continue
                if sym == EOS_ID:
                    done[b] = True
                else:
                    outputs[b].append(sym)
            if all(done):
                break
        return outputs, [not d for d in done]


def pad_batch(seqs, dtype=torch.long):
    lengths = torch.tensor([len(s) for s in seqs], dtype=torch.long)
    out = torch.full((len(seqs), int(lengths.max())), PAD_ID, dtype=dtype)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = torch.tensor(s, dtype=dtype)
    return out, lengths


def make_batch(examples):
    """``examples``: list of (input ids, target ids ending in EOS)."""
    src, lengths = pad_batch([e[0] for e in examples])
    tgt_out, _ = pad_batch([e[1] for e in examples])
    tgt_in, _ = pad_batch([[BOS_ID] + list(e[1][:-1]) for e in examples])
    return src, lengths, tgt_in, tgt_out


__all__ = ["InflectionModel", "pointer_mix", "make_batch", "pad_batch", "ENCDEC", "POINTER", "MODEL_KINDS"]
