"""Templated subject-modifier-verb-object grammar over the concept inventory."""

from dataclasses import dataclass, field

import numpy as np

from .languages import MOD_LO, N_MOD, N_NAME, N_NOUN, N_NUM, N_VERB, NAME_LO, NOUN_LO, NUM_LO, VERB_LO

MIN_LEN, MAX_LEN = 4, 12


@dataclass
class ConceptSentence:
    concepts: list[int]
    categories: list[str] = field(default_factory=list)
    idx: int = -1

    def __post_init__(self):
        if not self.categories:
            from .languages import category_of
            self.categories = [category_of(c) for c in self.concepts]
        if len(self.categories) != len(self.concepts):
            raise ValueError("categories and concepts must align")

    @property
    def length(self) -> int:
        return len(self.concepts)


def sample_sentence(rng: np.random.Generator, idx: int = -1) -> ConceptSentence:
    """One sentence of 4-12 concepts with at least one number or name."""
    concepts: list[int] = []
    cats: list[str] = []

    def put(lo, n, cat):
        concepts.append(lo + int(rng.integers(n)))
        cats.append(cat)

    subject_is_name = rng.random() < 0.4
    if subject_is_name:
        put(NAME_LO, N_NAME, "NAME")
    else:
        for _ in range(int(rng.integers(0, 3))):
            put(MOD_LO, N_MOD, "MOD")
        put(NOUN_LO, N_NOUN, "NOUN")

    put(VERB_LO, N_VERB, "VERB")

    want_number = rng.random() < 0.7 or not subject_is_name
    if want_number:
        put(NUM_LO, N_NUM, "NUM")
    for _ in range(int(rng.integers(0, 3))):
        put(MOD_LO, N_MOD, "MOD")
    put(NOUN_LO, N_NOUN, "NOUN")

    # optional second verb phrase, only while it fits the length cap
    if rng.random() < 0.35 and len(concepts) + 2 <= MAX_LEN:
        put(VERB_LO, N_VERB, "VERB")
        if rng.random() < 0.5 and len(concepts) + 2 <= MAX_LEN:
            put(MOD_LO, N_MOD, "MOD")
        put(NOUN_LO, N_NOUN, "NOUN")

    while len(concepts) < MIN_LEN:
        concepts.insert(-1, MOD_LO + int(rng.integers(N_MOD)))
        cats.insert(-1, "MOD")

    assert MIN_LEN <= len(concepts) <= MAX_LEN
    assert any(c in ("NUM", "NAME") for c in cats)
    return ConceptSentence(concepts, cats, idx)


def continuation_concepts(sent: ConceptSentence) -> tuple[list[int], list[str]]:
    """Deterministic follow-up: drop modifiers, advance each verb to its successor."""
    concepts, cats = [], []
    for c, k in zip(sent.concepts, sent.categories):
        if k == "MOD":
            continue
        if k == "VERB":
            c = VERB_LO + ((c - VERB_LO + 1) % N_VERB)
        concepts.append(c)
        cats.append(k)
    return concepts, cats
