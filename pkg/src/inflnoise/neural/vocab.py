from __future__ import annotations

from ..corpus import MSD

PAD, BOS, EOS, UNK, MASK = "<pad>", "<s>", "</s>", "<unk>", "<mask>"
SPECIALS = (PAD, BOS, EOS, UNK, MASK)
PAD_ID, BOS_ID, EOS_ID, UNK_ID, MASK_ID = range(len(SPECIALS))


def tag_symbol(tag: str) -> str:
    # Brackets keep tag symbols apart from single characters such as "V".
    return f"[{tag}]"


def is_tag_symbol(symbol: str) -> bool:
    return len(symbol) > 2 and symbol.startswith("[") and symbol.endswith("]")


class Vocabulary:
    """Specials first, then MSD tag symbols, then characters (both sorted)."""

    def __init__(self, symbols):
        symbols = list(symbols)
        if tuple(symbols[: len(SPECIALS)]) != SPECIALS:
            raise ValueError("vocabulary must start with the special symbols")
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate vocabulary symbols")
        self.symbols = symbols
        self.index = {s: i for i, s in enumerate(symbols)}

    @classmethod
    def build(cls, samples) -> "Vocabulary":
        """From training samples (``source``, ``target``, ``msd`` attributes)."""
        chars, tags = set(), set()
        for s in samples:
            chars.update(s.source)
            chars.update(s.target)
            if s.msd is not None:
                tags.update(s.msd.tags)
        return cls(list(SPECIALS) + sorted(tag_symbol(t) for t in tags) + sorted(chars))

    def __len__(self):
        return len(self.symbols)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.symbols == other.symbols

    def id(self, symbol: str) -> int:
        return self.index.get(symbol, UNK_ID)

    @property
    def char_ids(self) -> list:
        return [i for i, s in enumerate(self.symbols) if s not in SPECIALS and not is_tag_symbol(s)]

    def input_symbols(self, source: str, msd=None) -> list:
        """``[BOS] + tag symbols + source characters + [EOS]``; unknowns become UNK."""
        tags = [tag_symbol(t) for t in msd.tags] if msd is not None else []
        symbols = [BOS] + tags + list(source) + [EOS]
        return [s if s in self.index else UNK for s in symbols]

    def encode_input(self, source: str, msd=None) -> list:
        return [self.id(s) for s in self.input_symbols(source, msd)]

    def encode_target(self, target: str) -> list:
        return [self.id(c) for c in target] + [EOS_ID]

    def decode(self, ids) -> str:
        out = []
        for i in ids:
            if i == EOS_ID:
                break
            sym = self.symbols[i]
            if sym in SPECIALS or is_tag_symbol(sym):
                continue
            out.append(sym)
        return "".join(out)


def encode_input(vocab: Vocabulary, source: str, msd: MSD = None) -> list:
    return vocab.input_symbols(source, msd)
