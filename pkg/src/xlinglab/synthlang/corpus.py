"""Parallel corpus generation: one concept sentence, rendered into every language."""

import hashlib
from dataclasses import dataclass

import numpy as np

from .grammar import ConceptSentence, sample_sentence
from .languages import LanguageSpec, render_concepts

SPLITS = ("train", "dev", "test")


def split_of_index(idx: int) -> str:
    """Stable 80/10/10 assignment from a hash of the sentence index."""
    h = hashlib.sha256(f"idx:{idx}".encode()).digest()
    bucket = int.from_bytes(h[:8], "big") % 100
    if bucket < 80:
        return "train"
    if bucket < 90:
        return "dev"
    return "test"


@dataclass
class ParallelCorpus:
    sentences: list[ConceptSentence]
    renderings: dict[str, list[str]]
    splits: list[str]
    seed: int

    def indices(self, split: str) -> list[int]:
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return [i for i, s in enumerate(self.splits) if s == split]

    def __len__(self) -> int:
        return len(self.sentences)


def generate_parallel_corpus(family: list[LanguageSpec], n_sentences: int,
                             seed: int) -> ParallelCorpus:
    if n_sentences < 1:
        raise ValueError("n_sentences must be >= 1")
    rng = np.random.default_rng([seed, 0x5E27])
    sentences = [sample_sentence(rng, idx=i) for i in range(n_sentences)]
    renderings = {
        spec.lang_id: [render_concepts(spec, s.concepts, s.categories) for s in sentences]
        for spec in family
    }
    splits = [split_of_index(i) for i in range(n_sentences)]
    return ParallelCorpus(sentences, renderings, splits, seed)
