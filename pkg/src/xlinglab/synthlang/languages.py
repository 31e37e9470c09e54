"""Cipher languages over a shared concept vocabulary.

A language is a bijection from concept ids to short surface strings drawn
from a per-language character bank, plus a word-order rule. Numbers and
names share one global surface inventory across every language; everything
else is language-private unless lexical_overlap copies it verbatim from the
family's reference language (the first one).
"""

from dataclasses import dataclass, field

import numpy as np

# Concept inventory: fixed ranges, category derived from the id.
N_NOUN, N_VERB, N_MOD, N_NUM, N_NAME = 80, 40, 40, 20, 20
NOUN_LO, VERB_LO, MOD_LO, NUM_LO, NAME_LO = 0, 80, 120, 160, 180
YES_ID, NO_ID = 200, 201
N_CONCEPTS = 202
N_CONTENT_CONCEPTS = N_NOUN + N_VERB + N_MOD  # overlap is measured over these

CATEGORIES = ("NOUN", "VERB", "MOD", "NUM", "NAME")

ORDER_RULES = ("identity", "verb_final", "reverse")

# Disjoint per-language character banks; latin letters and digits are
# reserved for the globally shared name/number surfaces.
ALPHABETS = [
    "αβγδεζηθικλμνξοπρστυφχψω",
    "абвгдежзиклмнопрстуфхцчшщэюя",
    "աբգդեզէըթժիլխծկհձղճմյնշոչպջռսվ",
    "აბგდევზთიკლმნოპჟრსტუფქღყშჩცძწ",
    "אבגדהוזחטיכלמנסעפצקרשת",
    "ابتثجحخدذرزسشصضطظعغفقكلمن",
    "กขคงจฉชซญดตถทนบปผพฟมยรลวสหอ",
    "ᚠᚢᚦᚨᚱᚲᚷᚹᚺᚾᛁᛃᛇᛈᛉᛊᛏᛒᛖᛗᛚᛜᛞᛟ",
]


def category_of(concept_id: int) -> str:
    if concept_id < 0 or concept_id >= N_CONCEPTS:
        raise ValueError(f"unknown concept id {concept_id}")
    if concept_id < VERB_LO:
        return "NOUN"
    if concept_id < MOD_LO:
        return "VERB"
    if concept_id < NUM_LO:
        return "MOD"
    if concept_id < NAME_LO:
        return "NUM"
    if concept_id < YES_ID:
        return "NAME"
    return "YESNO"


@dataclass
class LanguageSpec:
    lang_id: str
    cipher: dict[int, str]
    alphabet_id: int
    order_rule: str
    lexical_overlap: float
    shared_ids: frozenset[int] = field(default_factory=frozenset)

    def surface(self, concept_id: int) -> str:
        return self.cipher[concept_id]


def _draw_word(rng: np.random.Generator, bank: list[str], taken: set[str]) -> str:
    while True:
        n = int(rng.integers(2, 5))
        w = "".join(rng.choice(bank, size=n))
        if w not in taken:
            taken.add(w)
            return w


def _shared_surfaces(rng: np.random.Generator) -> dict[int, str]:
    """Number and name surfaces, identical in every language."""
    out = {}
    values = rng.choice(1000, size=N_NUM, replace=False)
    for k, v in enumerate(values):
        out[NUM_LO + k] = str(int(v))
    upper = list("ABCDEFGHIJKLMNOPQRSTUVWXYZ")
    lower = list("abcdefghijklmnopqrstuvwxyz")
    taken: set[str] = set()
    for k in range(N_NAME):
        while True:
            n = int(rng.integers(2, 5))
            w = str(rng.choice(upper)) + "".join(rng.choice(lower, size=n))
            if w not in taken:
                taken.add(w)
                out[NAME_LO + k] = w
                break
    return out


def make_family(seed: int, specs: list[tuple]) -> list[LanguageSpec]:
    """Build a language family from (lang_id, alphabet_id, order_rule, lexical_overlap) tuples.

    The first tuple is the reference language that lexical_overlap copies from.
    Deterministic in (seed, specs).
    """
    if len(specs) < 2:
        raise ValueError("a family needs at least 2 languages")
    ids = [s[0] for s in specs]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate lang_id in {ids}")
    for lang_id, alphabet_id, order_rule, overlap in specs:
        if not 0 <= alphabet_id < len(ALPHABETS):
            raise ValueError(f"{lang_id}: alphabet_id {alphabet_id} out of range")
        if order_rule not in ORDER_RULES:
            raise ValueError(f"{lang_id}: unknown order_rule {order_rule!r}")
        if not 0.0 <= overlap <= 1.0:
            raise ValueError(f"{lang_id}: lexical_overlap {overlap} outside [0,1]")

    master = np.random.default_rng(seed)
    shared = _shared_surfaces(np.random.default_rng(master.integers(2**63)))
    content_ids = list(range(N_NOUN + N_VERB + N_MOD))

    family: list[LanguageSpec] = []
    reference: LanguageSpec | None = None
    for lang_id, alphabet_id, order_rule, overlap in specs:
        rng = np.random.default_rng(master.integers(2**63))
        bank = list(ALPHABETS[alphabet_id])
        cipher = dict(shared)
        taken = set(shared.values())

        copied: set[int] = set()
        if reference is not None and overlap > 0:
            n_copy = int(round(overlap * len(content_ids)))
            pick = rng.choice(len(content_ids), size=n_copy, replace=False)
            copied = {content_ids[i] for i in pick}
            for cid in sorted(copied):
                cipher[cid] = reference.cipher[cid]
                taken.add(cipher[cid])

        for cid in content_ids:
            if cid not in copied:
                cipher[cid] = _draw_word(rng, bank, taken)
        for cid in (YES_ID, NO_ID):
            cipher[cid] = _draw_word(rng, bank, taken)

        spec = LanguageSpec(lang_id, cipher, alphabet_id, order_rule, overlap,
                            shared_ids=frozenset(shared) | frozenset(copied))
        family.append(spec)
        if reference is None:
            reference = spec

    for spec in family:
        if len(set(spec.cipher.values())) != len(spec.cipher):
            raise AssertionError(f"{spec.lang_id}: cipher not injective")
    return family


def order_permutation(rule: str, categories: list[str]) -> list[int]:
    """Position permutation applied before ciphering; a bijection at every length."""
    n = len(categories)
    if rule == "identity":
        return list(range(n))
    if rule == "reverse":
        return list(range(n - 1, -1, -1))
    if rule == "verb_final":
        rest = [i for i in range(n) if categories[i] != "VERB"]
        verbs = [i for i in range(n) if categories[i] == "VERB"]
        return rest + verbs
    raise ValueError(f"unknown order rule {rule!r}")


def render_concepts(spec: LanguageSpec, concepts: list[int], categories: list[str],
                    rule: str | None = None) -> str:
    """Render a concept sequence in spec's language; rule overrides spec.order_rule."""
    perm = order_permutation(spec.order_rule if rule is None else rule, categories)
    return " ".join(spec.cipher[concepts[p]] for p in perm)


def family_manifest(family: list[LanguageSpec]) -> dict:
    """JSON-able description of the family, cipher included for reproducibility."""
    return {
        "languages": [
            {
                "lang_id": s.lang_id,
                "alphabet_id": s.alphabet_id,
                "order_rule": s.order_rule,
                "lexical_overlap": s.lexical_overlap,
                "cipher": {str(k): v for k, v in sorted(s.cipher.items())},
            }
            for s in family
        ]
    }
