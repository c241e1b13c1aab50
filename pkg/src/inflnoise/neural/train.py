"""Deterministic training, decoding, gradients and checkpoints."""

from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Optional

import numpy as np
import torch

from .model import ENCDEC, MODEL_KINDS, POINTER, InflectionModel, make_batch
from .vocab import Vocabulary

log = logging.getLogger(__name__)

__all__ = [
    "TrainConfig",
    "Inflector",
    "TrainingDiverged",
    "NonFiniteGradient",
    "new_inflector",
    "train",
    "fit",
    "examples_from_samples",
    "decode_greedy",
    "predict",
    "gradients",
    "param_hash",
    "save_checkpoint",
    "load_checkpoint",
    "write_loss_log",
]


@dataclass
class TrainConfig:
    epochs: int = 60
    batch_size: int = 32
    optimizer: str = "adam"  # adam | adadelta | sgd
    lr: float = 1e-3
    scheduler: str = "none"  # none | inv_sqrt
    warmup: int = 0
    seed: int = 13
    max_decode_len: int = 40
    embedding: int = 64
    hidden: int = 128
    clip_norm: Optional[float] = 1.0
    dtype: str = "float32"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.optimizer not in ("adam", "adadelta", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.scheduler not in ("none", "inv_sqrt"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.scheduler == "inv_sqrt" and self.warmup < 1:
            raise ValueError("inverse square-root scheduling needs warmup >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown training options {sorted(unknown)}")
        return cls(**d)

    def replace(self, **changes) -> "TrainConfig":
        return TrainConfig(**{**asdict(self), **changes})


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"loss became non-finite in epoch {epoch}")


class NonFiniteGradient(RuntimeError):
    def __init__(self, block: str):
        self.block = block
        super().__init__(f"non-finite gradient in parameter block {block!r}")


@dataclass
class Inflector:
    """A model together with its vocabulary and hyperparameters."""

    kind: str
    vocab: Vocabulary
    model: InflectionModel
    config: TrainConfig
    metadata: dict = field(default_factory=dict)

    @property
    def dtype(self):
        return getattr(torch, self.config.dtype)


@contextlib.contextmanager
def _single_thread():
    # One intra-op thread keeps float reductions identical across runs.
    before = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.set_num_threads(before)


def new_inflector(kind: str, vocab: Vocabulary, config: TrainConfig) -> Inflector:
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        model = InflectionModel(len(vocab), config.embedding, config.hidden, pointer=kind == POINTER)
    model.to(getattr(torch, config.dtype))
    return Inflector(kind, vocab, model, config, {"pretrained": False})


def examples_from_samples(vocab: Vocabulary, samples) -> list:
    return [(vocab.encode_input(s.source, s.msd), vocab.encode_target(s.target)) for s in samples]


def _optimizer(params, config: TrainConfig):
    if config.optimizer == "adam":
        return torch.optim.Adam(params, lr=config.lr)
    if config.optimizer == "adadelta":
        return torch.optim.Adadelta(params, lr=config.lr)
    return torch.optim.SGD(params, lr=config.lr)


def inv_sqrt_factor(step: int, warmup: int) -> float:
    """Linear warm-up to 1 at ``warmup`` steps, then ``sqrt(warmup / step)``."""
    step = max(step, 1)
    return min(step / warmup, math.sqrt(warmup / step))


def fit(inflector: Inflector, make_examples: Callable, config: TrainConfig) -> list:
    """Train in place.  ``make_examples(epoch, rng)`` returns that epoch's examples.

    Returns the per-epoch mean loss log as ``[(epoch, loss), ...]``.
    """
    model = inflector.model
    opt = _optimizer(model.parameters(), config)
    sched = None
    if config.scheduler == "inv_sqrt":
        sched = torch.optim.lr_scheduler.LambdaLR(opt, lambda s: inv_sqrt_factor(s + 1, config.warmup))
    order_gen = torch.Generator().manual_seed(config.seed)
    data_rng = np.random.default_rng(config.seed)
    history = []
    with _single_thread():
        model.train()
        for epoch in range(1, config.epochs + 1):
            examples = make_examples(epoch, data_rng)
            if not examples:
                raise ValueError("no training examples")
            order = torch.randperm(len(examples), generator=order_gen).tolist()
            total, count = 0.0, 0
            for start in range(0, len(order), config.batch_size):
                batch = make_batch([examples[i] for i in order[start : start + config.batch_size]])
                opt.zero_grad()
                loss = model.loss(*batch)
                if not torch.isfinite(loss):
                    raise TrainingDiverged(epoch)
                loss.backward()
                if config.clip_norm:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), config.clip_norm)
                opt.step()
                if sched is not None:
                    sched.step()
                n_sym = int((batch[3] != 0).sum())
                total += float(loss.detach()) * n_sym
                count += n_sym
            mean = total / count
            if not math.isfinite(mean):
                raise TrainingDiverged(epoch)
            history.append((epoch, mean))
            log.debug("%s epoch %d loss %.4f", inflector.kind, epoch, mean)
        model.eval()
    return history


def train(kind: str, dataset, config: TrainConfig, vocab: Optional[Vocabulary] = None, init: Optional[Inflector] = None):
    """Train a fresh (or ``init``-initialized) model on dataset samples.

    Returns ``(inflector, loss_log)``.  Identical inputs and ``config.seed``
    give bit-identical parameters.
    """
    samples = list(dataset)
    if not samples:
        raise ValueError("empty training set")
    if config.epochs < 1:
        raise ValueError("training needs at least one epoch")
    if init is not None:
        inflector = Inflector(init.kind, init.vocab, _clone(init.model), config, dict(init.metadata))
        if kind != init.kind:
            raise ValueError(f"cannot finetune a {init.kind} checkpoint as {kind}")
    else:
        inflector = new_inflector(kind, vocab or Vocabulary.build(samples), config)
    examples = examples_from_samples(inflector.vocab, samples)
    history = fit(inflector, lambda epoch, rng: examples, config)
    return inflector, history


def _clone(model: InflectionModel) -> InflectionModel:
    emb = model.embed.embedding_dim
    hidden = model.decoder.hidden_size
    copy = InflectionModel(model.vocab_size, emb, hidden, model.pointer)
    copy.load_state_dict(model.state_dict())
    return copy.to(next(model.parameters()).dtype)


# ---------------------------------------------------------------------------
# Inference


def decode_greedy(inflector: Inflector, source: str, msd=None, max_len: Optional[int] = None):
    """Decode one word; returns ``(word, truncated)``."""
    words, flags = _decode(inflector, [(source, msd)], max_len)
    return words[0], flags[0]


def _decode(inflector, items, max_len=None, batch_size=256):
    max_len = inflector.config.max_decode_len if max_len is None else max_len
    vocab = inflector.vocab
    words, flags = [], []
    with _single_thread():
        inflector.model.eval()
        for start in range(0, len(items), batch_size):
            chunk = items[start : start + batch_size]
            seqs = [vocab.encode_input(src, msd) for src, msd in chunk]
            batch = make_batch([(s, [0]) for s in seqs])
            ids, truncated = inflector.model.greedy(batch[0], batch[1], max_len)
            words.extend(vocab.decode(x) for x in ids)
            flags.extend(truncated)
    return words, flags


def predict(inflector: Inflector, instances) -> list:
    """Greedy predictions for :class:`EvalInstance`-like items (lemma, msd)."""
    words, _ = _decode(inflector, [(inst.lemma, inst.msd) for inst in instances])
    return words


# ---------------------------------------------------------------------------
# Gradients and hashes


def gradients(inflector: Inflector, samples, reduction: str = "mean") -> dict:
    """Gradient of the loss on ``samples`` with respect to every parameter."""
    model = inflector.model
    model.zero_grad()
    batch = make_batch(examples_from_samples(inflector.vocab, samples))
    model.loss(*batch, reduction=reduction).backward()
    grads = {}
    for name, p in model.named_parameters():
        g = p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
        if not torch.isfinite(g).all():
            raise NonFiniteGradient(name)
        grads[name] = g
    model.zero_grad()
    return grads


def param_hash(inflector: Inflector) -> str:
    h = hashlib.sha256()
    for name, tensor in sorted(inflector.model.state_dict().items()):
        h.update(name.encode())
        h.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Files


def save_checkpoint(path, inflector: Inflector) -> None:
    """JSON checkpoint: kind, vocabulary, hyperparameters, metadata, tensors."""
    state = {
        name: {"shape": list(t.shape), "data": t.detach().cpu().reshape(-1).tolist()}
        for name, t in sorted(inflector.model.state_dict().items())
    }
    doc = {
        "format": "inflnoise-checkpoint/1",
        "kind": inflector.kind,
        "vocab": inflector.vocab.symbols,
        "config": asdict(inflector.config),
        "metadata": inflector.metadata,
        "n_params": inflector.model.n_params(),
        "params": state,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False)


def load_checkpoint(path) -> Inflector:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    config = TrainConfig.from_dict(doc["config"])
    vocab = Vocabulary(doc["vocab"])
    dtype = getattr(torch, config.dtype)
    model = InflectionModel(len(vocab), config.embedding, config.hidden, pointer=doc["kind"] == POINTER)
    state = {name: torch.tensor(v["data"], dtype=dtype).reshape(v["shape"]) for name, v in doc["params"].items()}
    model.load_state_dict(state)
    model.to(dtype)
    model.eval()
    return Inflector(doc["kind"], vocab, model, config, doc.get("metadata", {}))


def write_loss_log(path, history) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss"])
        for epoch, loss in history:
            writer.writerow([epoch, repr(float(loss))])


KINDS = {ENCDEC: "attention encoder-decoder", POINTER: "pointer-generator"}
