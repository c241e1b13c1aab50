"""Character-level masked language model pretraining.

The pretraining set is every word type of a training set (no MSDs).  Each
epoch every word gets a fresh mask: characters are selected with
``mask_prob``; a selected character becomes MASK (80%), a random character
(10%) or stays unchanged (10%).  The model reconstructs the whole word.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .neural.train import TrainConfig, fit, new_inflector, train
from .neural.vocab import BOS_ID, EOS_ID, MASK_ID, Vocabulary

__all__ = [
    "MaskPolicy",
    "MaskedSample",
    "build_pretrain_set",
    "mask_word",
    "pretrain",
    "pretrain_then_finetune",
    "default_pretrain_config",
]


@dataclass(frozen=True)
class MaskPolicy:
    mask_prob: float = 0.2
    p_mask: float = 0.8
    p_random: float = 0.1
    p_keep: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.mask_prob <= 1.0:
            raise ValueError("mask_prob must lie in [0, 1]")
        split = (self.p_mask, self.p_random, self.p_keep)
        if min(split) < 0 or abs(sum(split) - 1.0) > 1e-9:
            raise ValueError("action split must be non-negative and sum to 1")


@dataclass(frozen=True)
class MaskedSample:
    input: tuple  # symbol ids with substitutions, no BOS/EOS
    target: str
    actions: tuple  # per character: "" (unselected), "mask", "random", "keep"


def build_pretrain_set(dataset) -> list:
    """Sorted distinct source and target surfaces of a training set."""
    samples = list(dataset)
    if not samples:
        raise ValueError("empty training set")
    return sorted({s.source for s in samples} | {s.target for s in samples})


def mask_word(word: str, policy: MaskPolicy, rng: np.random.Generator, vocab: Vocabulary) -> MaskedSample:
    if not word:
        raise ValueError("cannot mask an empty word")
    ids = [vocab.id(c) for c in word]
    chars = vocab.char_ids
    selected = rng.random(len(ids)) < policy.mask_prob
    choice = rng.random(len(ids))
    out, actions = [], []
    for i, sym in enumerate(ids):
        if not selected[i]:
            out.append(sym)
            actions.append("")
        elif choice[i] < policy.p_mask:
            out.append(MASK_ID)
            actions.append("mask")
        elif choice[i] < policy.p_mask + policy.p_random:
            out.append(chars[int(rng.integers(len(chars)))])
            actions.append("random")
        else:
            out.append(sym)
            actions.append("keep")
    return MaskedSample(tuple(out), word, tuple(actions))


def default_pretrain_config(kind: str, finetune: TrainConfig, epochs: int = 40) -> TrainConfig:
    """Finetuning hyperparameters with pretraining epochs; the pointer-generator warms up."""
    if kind == "pointer":
        return finetune.replace(epochs=epochs, scheduler="inv_sqrt", warmup=100)
    return finetune.replace(epochs=epochs)


def pretrain(kind: str, dataset, config: TrainConfig, policy: MaskPolicy = MaskPolicy(), vocab: Optional[Vocabulary] = None):
    """Denoising pretraining on the word types of ``dataset``.

    The vocabulary is built from the full training set so that finetuning can
    start from the returned model.  Returns ``(inflector, loss_log)``.
    """
    samples = list(dataset)
    vocab = vocab or Vocabulary.build(samples)
    words = build_pretrain_set(samples)
    inflector = new_inflector(kind, vocab, config)

    def make_examples(epoch, rng):
        examples = []
        for w in words:
            masked = mask_word(w, policy, rng, vocab)
            examples.append(([BOS_ID, *masked.input, EOS_ID], vocab.encode_target(w)))
        return examples

    history = fit(inflector, make_examples, config)
    inflector.metadata["pretrained"] = True
    inflector.metadata["pretrain_epochs"] = config.epochs
    return inflector, history


def pretrain_then_finetune(kind: str, dataset, pretrain_config: TrainConfig, finetune_config: TrainConfig, policy: MaskPolicy = MaskPolicy()):
    """Returns ``(inflector, pretrain_log, finetune_log)``.

    With zero pretraining epochs this is exactly plain training.
    """
    if pretrain_config.epochs == 0:
        inflector, history = train(kind, dataset, finetune_config)
        return inflector, [], history
    pre, pre_log = pretrain(kind, dataset, pretrain_config, policy)
    inflector, history = train(kind, dataset, finetune_config, init=pre)
    inflector.config = finetune_config
    return inflector, pre_log, history
