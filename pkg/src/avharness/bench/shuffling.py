"""Deterministic option shuffling.

The permutation for an item is a pure function of (global seed, item id), so
every model and every resumed run sees the same option order, and grading can
un-permute a chosen letter back to the original option."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from ..prompts import LETTERS
from .dataset import QAItem


def derive_seed(global_seed: int, item_id: str) -> int:
    digest = hashlib.sha256(f"{global_seed}:{item_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class ShuffledItem:
    item: QAItem
    permutation: tuple[int, ...]  # shuffled position i holds original option permutation[i]
    options: tuple[str, ...]  # options in shuffled order
    gold_letter: str
    seed_used: int

    @property
    def id(self) -> str:
        return self.item.id

    @property
    def question(self) -> str:
        return self.item.question

    def original_index(self, letter: str) -> int:
        """Un-permute a shuffled letter back to the original option index."""
        position = LETTERS.index(letter)
        if position >= len(self.permutation):
            raise ValueError(f"letter {letter!r} out of range for {len(self.permutation)} options")
        return self.permutation[position]


def shuffle_options(item: QAItem, global_seed: int) -> ShuffledItem:
    seed = derive_seed(global_seed, item.id)
    rng = random.Random(seed)
    permutation = tuple(rng.sample(range(item.n_options), item.n_options))
    options = tuple(item.options[original] for original in permutation)
    gold_letter = LETTERS[permutation.index(item.gold_index)]
    return ShuffledItem(
        item=item,
        permutation=permutation,
        options=options,
        gold_letter=gold_letter,
        seed_used=seed,
    )
