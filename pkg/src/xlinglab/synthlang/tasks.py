"""Casting parallel sentences into text-to-text task instances.

Templates: tagging interleaves a sentinel before each word and the target
repeats each sentinel followed by the tag; pair classification joins two
sentences with a sentinel and the target is the sentinel plus the language's
yes/no word; span extraction appends a sentinel and the target is the
sentinel plus the answer; generation wraps the sentence in task markers.
All sampling (pair polarity, negative partner) is a pure function of
(corpus seed, task, sentence index) so parallel instances stay aligned
across languages.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .corpus import ParallelCorpus
from .grammar import ConceptSentence, continuation_concepts
from .languages import (NO_ID, ORDER_RULES, YES_ID, LanguageSpec,
                        order_permutation, render_concepts)

TAG, PAIRCLS, SPANX = "TAG", "PAIRCLS", "SPANX"
GEN_SUM, GEN_TITLE, GEN_STORY = "GEN_SUM", "GEN_TITLE", "GEN_STORY"
GEN_TASKS = (GEN_SUM, GEN_TITLE, GEN_STORY)
ALL_TASKS = (TAG, PAIRCLS, SPANX) + GEN_TASKS

SUM_K = 3


@dataclass
class TaskInstance:
    input_text: str
    target_text: str
    task: str
    lang: str
    gold_label: object
    idx: int = -1
    split: str = ""


def gold_label(inst: TaskInstance):
    """Canonical label: language-independent for TAG/PAIRCLS/SPANX by
    construction, the surface target for GEN_* (language-dependent by design)."""
    return inst.gold_label


def _hash_int(*parts) -> int:
    h = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


def _paraphrase(sent: ConceptSentence, lang: LanguageSpec, seed: int) -> str:
    """Same concepts under a different order rule."""
    alts = [r for r in ORDER_RULES if r != lang.order_rule]
    rule = alts[_hash_int(seed, PAIRCLS, "rule", sent.idx) % len(alts)]
    return render_concepts(lang, sent.concepts, sent.categories, rule=rule)


def _negative_partner(corpus: ParallelCorpus, idx: int) -> int:
    """A different sentence from the same split, length-matched when possible."""
    split = corpus.splits[idx]
    length = corpus.sentences[idx].length
    pool = [j for j in corpus.indices(split) if j != idx]
    if not pool:
        raise ValueError("PAIRCLS needs at least 2 sentences per split")
    best = min(abs(corpus.sentences[j].length - length) for j in pool)
    pool = [j for j in pool if abs(corpus.sentences[j].length - length) == best]
    rng = np.random.default_rng(_hash_int(corpus.seed, PAIRCLS, "neg", idx))
    return pool[int(rng.integers(len(pool)))]


def cast_to_text2text(sent: ConceptSentence, task: str, lang: LanguageSpec,
                      corpus: ParallelCorpus) -> TaskInstance | None:
    idx = sent.idx
    split = corpus.splits[idx] if 0 <= idx < len(corpus.splits) else ""
    rendered = render_concepts(lang, sent.concepts, sent.categories)
    words = rendered.split()

    if task == TAG:
        perm = order_permutation(lang.order_rule, sent.categories)
        perm_cats = [sent.categories[p] for p in perm]
        inp = " ".join(f"<extra_id_{j}> {w}" for j, w in enumerate(words))
        tgt = " ".join(f"<extra_id_{j}> {c}" for j, c in enumerate(perm_cats))
        return TaskInstance(inp, tgt, task, lang.lang_id,
                            tuple(sent.categories), idx, split)

    if task == PAIRCLS:
        is_pos = _hash_int(corpus.seed, PAIRCLS, "pol", idx) % 2 == 0
        if is_pos:
            other = _paraphrase(sent, lang, corpus.seed)
        else:
            other = corpus.renderings[lang.lang_id][_negative_partner(corpus, idx)]
        answer = lang.cipher[YES_ID if is_pos else NO_ID]
        return TaskInstance(f"{rendered} <extra_id_0> {other}",
                            f"<extra_id_0> {answer}",
                            task, lang.lang_id, is_pos, idx, split)

    if task == SPANX:
        hits = [c for c, k in zip(sent.concepts, sent.categories) if k in ("NUM", "NAME")]
        if not hits:
            return None  # skipped, caller reports
        answer = lang.cipher[hits[0]]
        return TaskInstance(f"{rendered} <extra_id_0>",
                            f"<extra_id_0> {answer}",
                            task, lang.lang_id, answer, idx, split)

    if task == GEN_SUM:
        k = min(SUM_K, sent.length)
        text = render_concepts(lang, sent.concepts[:k], sent.categories[:k])
        return TaskInstance(f"story: {rendered} sum: <extra_id_0>",
                            f"<extra_id_0> {text}",
                            task, lang.lang_id, text, idx, split)

    if task == GEN_TITLE:
        counts: dict[int, int] = {}
        for c, k in zip(sent.concepts, sent.categories):
            if k in ("NOUN", "VERB", "MOD"):
                counts[c] = counts.get(c, 0) + 1
        top = min(counts, key=lambda c: (-counts[c], c))
        text = lang.cipher[top]
        return TaskInstance(f"story: {rendered} title: <extra_id_0>",
                            f"<extra_id_0> {text}",
                            task, lang.lang_id, text, idx, split)

    if task == GEN_STORY:
        concepts, cats = continuation_concepts(sent)
        text = render_concepts(lang, concepts, cats)
        return TaskInstance(f"story: {rendered} next: <extra_id_0>",
                            f"<extra_id_0> {text}",
                            task, lang.lang_id, text, idx, split)

    raise ValueError(f"unknown task {task!r}")


def make_task_dataset(corpus: ParallelCorpus, task: str, lang: LanguageSpec,
                      split: str | None = None) -> tuple[list[TaskInstance], int]:
    """All instances of one task in one language; returns (instances, n_skipped)."""
    idxs = corpus.indices(split) if split else range(len(corpus))
    out, skipped = [], 0
    for i in idxs:
        inst = cast_to_text2text(corpus.sentences[i], task, lang, corpus)
        if inst is None:
            skipped += 1
        else:
            out.append(inst)
    return out, skipped


def export_jsonl(instances: list[TaskInstance], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            gold = list(inst.gold_label) if isinstance(inst.gold_label, tuple) else inst.gold_label
            f.write(json.dumps({
                "task": inst.task, "lang": inst.lang,
                "input": inst.input_text, "target": inst.target_text,
                "gold": gold, "split": inst.split, "idx": inst.idx,
            }, ensure_ascii=False) + "\n")
