"""Character-level inflection models (attention encoder-decoder and pointer-generator)."""

from .model import ENCDEC, MODEL_KINDS, POINTER, InflectionModel, make_batch, pointer_mix
from .train import (
    Inflector,
    NonFiniteGradient,
    TrainConfig,
    TrainingDiverged,
    decode_greedy,
    examples_from_samples,
    fit,
    gradients,
    load_checkpoint,
    new_inflector,
    param_hash,
    predict,
    save_checkpoint,
    train,
    write_loss_log,
)
from .vocab import BOS, EOS, MASK, PAD, SPECIALS, UNK, Vocabulary, encode_input, tag_symbol

__all__ = [
    "ENCDEC", "POINTER", "MODEL_KINDS", "InflectionModel", "make_batch", "pointer_mix",
    "Inflector", "NonFiniteGradient", "TrainConfig", "TrainingDiverged", "decode_greedy",
    "examples_from_samples", "fit", "gradients", "load_checkpoint", "new_inflector",
    "param_hash", "predict", "save_checkpoint", "train", "write_loss_log",
    "BOS", "EOS", "MASK", "PAD", "SPECIALS", "UNK", "Vocabulary", "encode_input", "tag_symbol",
]
