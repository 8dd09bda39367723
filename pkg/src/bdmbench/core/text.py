"""Toy text pipeline: whitespace tokenizer over a small fixed vocabulary.

The vocabulary covers scene words (objects, colors, counts, backgrounds,
styles), a Spanish twin for each object/color word (used by the
translation defense), and a homoglyph twin (o -> ô) for every word
containing the letter "o" so that character-substitution triggers stay
tokenizable. Tokenization is deterministic: lowercase + whitespace split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import torch
from torch import nn

from .errors import ParameterError, VocabularyError

FILLER_WORDS = ("a", "an", "the", "of", "on", "in", "and", "photo", "picture")
OBJECT_WORDS = ("dog", "cat", "bird", "zebra", "car", "house", "tree", "fish")
PLURAL_WORDS = ("dogs", "cats", "birds", "zebras", "cars", "houses", "trees")
COLOR_WORDS = ("red", "green", "blue", "yellow", "purple", "orange", "white", "black", "gray")
COUNT_WORDS = ("one", "two", "three", "four")
BACKGROUND_WORDS = ("grass", "beach", "street", "snow")
EXTRA_WORDS = ("watercolor", "framed", "beautiful", "young", "running", "sitting")

# Spanish twins keyed by the English word; used by perturb_text("translate_stub").
TRANSLATION_TABLE = {
    "dog": "perro", "cat": "gato", "bird": "pajaro", "zebra": "cebra",
    "car": "coche", "house": "casa", "tree": "arbol", "fish": "pez",
    "dogs": "perros", "cats": "gatos", "birds": "pajaros", "zebras": "cebras",
    "cars": "coches", "houses": "casas", "trees": "arboles",
    "red": "rojo", "green": "verde", "blue": "azul", "yellow": "amarillo",
    "purple": "morado", "orange": "naranja", "white": "blanco",
    "black": "negro", "gray": "gris",
    "grass": "hierba", "beach": "playa", "street": "calle", "snow": "nieve",
    "photo": "foto", "one": "uno", "two": "dos", "three": "tres", "four": "cuatro",
}

# Non-Latin -> Latin fold table for the homoglyph defense.
HOMOGLYPH_FOLD = {
    "ô": "o",   # o with circumflex
    "ȗ": "o",   # o with inverted breve
    "о": "o",   # Cyrillic o
    "à": "a",
    "е": "e",
}

TOKEN_INSERTION_TRIGGER = "​"  # zero-width space


def homoglyph_variant(word: str, source: str = "o", replacement: str = "ô") -> str:
    return word.replace(source, replacement)


def base_vocabulary() -> list[str]:
    words: list[str] = []
    for group in (FILLER_WORDS, OBJECT_WORDS, PLURAL_WORDS, COLOR_WORDS,
                  COUNT_WORDS, BACKGROUND_WORDS, EXTRA_WORDS):
        words.extend(group)
    words.extend(sorted(set(TRANSLATION_TABLE.values())))
    # Homoglyph twins keep char-substituted prompts in-vocabulary.
    for w in list(words):
        if "o" in w:
            words.append(homoglyph_variant(w))
    words.append(TOKEN_INSERTION_TRIGGER)
    seen: set[str] = set()
    ordered = []
    for w in words:
        if w not in seen:
            seen.add(w)
            ordered.append(w)
    return ordered


class Vocabulary:
    """Word <-> index mapping with optional token addition (personalization)."""

    def __init__(self, words: Iterable[str] | None = None):
        self.words: list[str] = list(words) if words is not None else base_vocabulary()
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ParameterError("duplicate words in vocabulary")

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def add(self, word: str) -> int:
        if word in self.index:
            raise VocabularyError(f"token collision: {word!r} already in vocabulary")
        self.index[word] = len(self.words)
        self.words.append(word)
        return self.index[word]

    def encode_word(self, word: str) -> int:
        try:
            return self.index[word]
        except KeyError:
            raise VocabularyError(f"unknown token {word!r}") from None


@dataclass(frozen=True)
class TextPrompt:
    """Tokenized prompt; same raw text always yields the same tokens."""

    raw: str
    tokens: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(raw: str, vocab: Vocabulary) -> TextPrompt:
    words = raw.lower().split()
    return TextPrompt(raw=raw, tokens=tuple(vocab.encode_word(w) for w in words))


class TextEncoder(nn.Module):
    """Embedding-table encoder: per-token vectors plus a mean-pooled vector.

    Per-token outputs depend only on (token, position), so editing one
    token perturbs exactly one position pre-pooling. The empty prompt
    pools to a learned null embedding.
    """

    def __init__(self, vocab_size: int, dim: int = 128, max_len: int = 24,
                 generator: torch.Generator | None = None):
        super().__init__()
        self.dim = dim
        self.max_len = max_len
        g = generator
        self.embedding = nn.Embedding(vocab_size, dim)
        self.positional = nn.Embedding(max_len, dim)
        self.null_embedding = nn.Parameter(torch.empty(dim))
        with torch.no_grad():
            self.embedding.weight.copy_(torch.randn(vocab_size, dim, generator=g) * 0.3)
            self.positional.weight.copy_(torch.randn(max_len, dim, generator=g) * 0.02)
            self.null_embedding.copy_(torch.randn(dim, generator=g) * 0.3)

    @property
    def vocab_size(self) -> int:
        return self.embedding.num_embeddings

    def grow(self, n_new: int, generator: torch.Generator | None = None) -> None:
        """Append embedding rows for newly added vocabulary tokens."""
        old = self.embedding.weight.data
        extra = torch.randn(n_new, self.dim, generator=generator) * 0.3
        emb = nn.Embedding(old.shape[0] + n_new, self.dim)
        with torch.no_grad():
            emb.weight[: old.shape[0]] = old
            emb.weight[old.shape[0]:] = extra
        self.embedding = emb

    def forward(self, token_batch: torch.Tensor, lengths: torch.Tensor):
        """Encode padded token indices (B, L) with per-sample lengths.

        Returns per-token embeddings (B, L, D) and pooled vectors (B, D).
        Padding positions are zeroed and excluded from the pool.
        """
        b, length = token_batch.shape
        if length > self.max_len:
            raise ParameterError(f"prompt length {length} exceeds max_len {self.max_len}")
        pos = torch.arange(length, device=token_batch.device)
        seq = self.embedding(token_batch) + self.positional(pos)[None, :, :]
        mask = (pos[None, :] < lengths[:, None]).to(seq.dtype)
        seq = seq * mask[:, :, None]
        denom = lengths.clamp(min=1).to(seq.dtype)[:, None]
        pooled = seq.sum(dim=1) / denom
        empty = (lengths == 0)
        if empty.any():
            pooled = torch.where(empty[:, None], self.null_embedding[None, :], pooled)
        return seq, pooled


def encode_text(prompt: TextPrompt, encoder: TextEncoder):
    """Deterministic embedding sequence and pooled vector for one prompt."""
    for tok in prompt.tokens:
        if tok >= encoder.vocab_size:
            raise VocabularyError(f"token index {tok} outside encoder table")
    tokens = torch.tensor([list(prompt.tokens)], dtype=torch.long)
    lengths = torch.tensor([len(prompt.tokens)], dtype=torch.long)
    if len(prompt.tokens) == 0:
        tokens = torch.zeros(1, 1, dtype=torch.long)
        lengths = torch.zeros(1, dtype=torch.long)
    with torch.no_grad():
        seq, pooled = encoder(tokens, lengths)
    return seq[0, : max(len(prompt.tokens), 0)], pooled[0]
