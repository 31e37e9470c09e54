"""Per-task evaluation of decoded predictions against reference instances.

Sentinel tokens are markup, not content: they are stripped before string
comparison everywhere except tagging, where they carry the slot alignment.
"""

import re
from collections import Counter

from ..synthlang.tasks import GEN_TASKS, PAIRCLS, SPANX, TAG, TaskInstance
from .rouge import rouge_l

_SENTINEL = re.compile(r"<extra_id_\d+>")


def strip_sentinels(text: str) -> str:
    return " ".join(t for t in text.split() if not _SENTINEL.fullmatch(t))


def primary_metric(task: str) -> str:
    if task == TAG:
        return "accuracy"
    if task == PAIRCLS:
        return "f1"
    if task == SPANX:
        return "f1"
    if task in GEN_TASKS:
        return "rouge_l"
    raise ValueError(f"unknown task {task!r}")


def _slot_map(text: str) -> dict[str, str]:
    pairs = {}
    toks = text.split()
    for i, tok in enumerate(toks):
        if _SENTINEL.fullmatch(tok) and i + 1 < len(toks) and not _SENTINEL.fullmatch(toks[i + 1]):
            pairs[tok] = toks[i + 1]
    return pairs


def _tag_accuracy(predictions: list[str], refs: list[TaskInstance]) -> float:
    correct = total = 0
    for pred, ref in zip(predictions, refs):
        want = _slot_map(ref.target_text)
        got = _slot_map(pred)
        total += len(want)
        correct += sum(got.get(slot) == tag for slot, tag in want.items())
    return correct / total if total else 0.0


def _paircls_f1(predictions: list[str], refs: list[TaskInstance],
                yes_words: set | None = None) -> float:
    """Binary F1 on the yes/no decision.

    Without a lexicon, a prediction counts as positive when it equals the
    references' own yes surface. With `yes_words` (the yes surfaces of every
    language in the family), a positive answer in any language counts, so
    zero-shot runs are scored on the decision rather than on which
    language's yes word the model picked.
    """
    if yes_words is None:
        ref_yes = {strip_sentinels(r.target_text) for r in refs if r.gold_label is True}
        if not ref_yes:
            raise ValueError("PAIRCLS F1 needs at least one positive reference")
        yes_words = {sorted(ref_yes)[0]}
    tp = fp = fn = 0
    for pred, ref in zip(predictions, refs):
        pred_pos = strip_sentinels(pred) in yes_words
        if pred_pos and ref.gold_label:
            tp += 1
        elif pred_pos and not ref.gold_label:
            fp += 1
        elif not pred_pos and ref.gold_label:
            fn += 1
    if tp == fp == fn == 0:
        return 1.0  # nothing positive anywhere: vacuously perfect
    if tp == 0:
        return 0.0
    p, r = tp / (tp + fp), tp / (tp + fn)
    return 2 * p * r / (p + r)


def _token_f1(pred: str, gold: str) -> float:
    pc, gc = Counter(pred.split()), Counter(gold.split())
    common = sum((pc & gc).values())
    if common == 0:
        return 0.0
    p, r = common / sum(pc.values()), common / sum(gc.values())
    return 2 * p * r / (p + r)


def task_metric(task: str, predictions: list[str], refs: list[TaskInstance],
                yes_words: set | None = None) -> dict[str, float]:
    """Metric dict keyed per task kind (see primary_metric).

    `yes_words` only affects PAIRCLS; see _paircls_f1.
    """
    if len(predictions) != len(refs):
        raise ValueError("predictions and references must align")
    if not refs:
        raise ValueError("empty evaluation set")
    if task == TAG:
        return {"accuracy": _tag_accuracy(predictions, refs)}
    if task == PAIRCLS:
        return {"f1": _paircls_f1(predictions, refs, yes_words)}
    if task == SPANX:
        em = f1 = 0.0
        for pred, ref in zip(predictions, refs):
            ps, gs = strip_sentinels(pred), strip_sentinels(ref.target_text)
            em += float(ps == gs)
            f1 += _token_f1(ps, gs)
        return {"em": em / len(refs), "f1": f1 / len(refs)}
    if task in GEN_TASKS:
        scores = [rouge_l(strip_sentinels(p), strip_sentinels(r.target_text))
                  for p, r in zip(predictions, refs)]
        return {"rouge_l": sum(scores) / len(scores)}
    raise ValueError(f"unknown task {task!r}")
