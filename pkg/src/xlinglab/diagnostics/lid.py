"""Character-bigram language identification with additive smoothing."""

from dataclasses import dataclass

import numpy as np

from ..synthlang.corpus import ParallelCorpus
from .metrics import strip_sentinels


@dataclass
class LidModel:
    langs: list[str]            # sorted
    char_index: dict[str, int]  # last slot is the unseen-character bucket
    log_tables: np.ndarray      # (n_langs, n_chars, n_chars) conditional log P
    alpha: float


def train_lid(corpus: ParallelCorpus, n: int = 2, alpha: float = 1.0,
              split: str = "train") -> LidModel:
    """Smoothed bigram model per language, trained on one corpus split."""
    if n != 2:
        raise ValueError("only character bigrams are implemented")
    langs = sorted(corpus.renderings)
    idxs = corpus.indices(split)
    if len(idxs) < 100:
        raise ValueError(f"need >= 100 sentences per language, have {len(idxs)}")

    chars = sorted({ch for lang in langs for i in idxs
                    for ch in corpus.renderings[lang][i]})
    char_index = {ch: k for k, ch in enumerate(chars)}
    c = len(chars) + 1  # one bucket for unseen characters

    counts = np.zeros((len(langs), c, c))
    for li, lang in enumerate(langs):
        for i in idxs:
            s = corpus.renderings[lang][i]
            for a, b in zip(s, s[1:]):
                counts[li, char_index[a], char_index[b]] += 1
    smoothed = counts + alpha
    log_tables = np.log(smoothed / smoothed.sum(axis=2, keepdims=True))
    return LidModel(langs, char_index, log_tables, alpha)


def _log_likelihoods(model: LidModel, text: str) -> np.ndarray | None:
    if len(text) < 2:
        return None
    oov = len(model.char_index)
    ids = [model.char_index.get(ch, oov) for ch in text]
    a = np.array(ids[:-1])
    b = np.array(ids[1:])
    return model.log_tables[:, a, b].sum(axis=1)


def lid_confidences(model: LidModel, text: str) -> dict[str, float]:
    """Softmax over per-language log-likelihoods; uniform with no evidence."""
    ll = _log_likelihoods(model, strip_sentinels(text))
    if ll is None:
        u = 1.0 / len(model.langs)
        return {lang: u for lang in model.langs}
    z = np.exp(ll - ll.max())
    z /= z.sum()
    return {lang: float(z[i]) for i, lang in enumerate(model.langs)}


def lid_predict(model: LidModel, text: str) -> str:
    conf = lid_confidences(model, text)
    return max(model.langs, key=lambda lang: (conf[lang], -model.langs.index(lang)))


def lid_accuracy(model: LidModel, corpus: ParallelCorpus, split: str = "test") -> float:
    idxs = corpus.indices(split)
    total = correct = 0
    for lang in model.langs:
        for i in idxs:
            total += 1
            correct += lid_predict(model, corpus.renderings[lang][i]) == lang
    return correct / total


@dataclass
class AccidentalTranslationReport:
    rate: float                      # fraction predicted as a wrong language
    mean_conf_expected: float
    mean_conf_source: float | None   # None when no source language given


def accidental_translation_rate(model: LidModel, outputs: list[str],
                                expected_lang: str,
                                source_lang: str | None = None) -> AccidentalTranslationReport:
    if not outputs:
        raise ValueError("no outputs to score")
    if expected_lang not in model.langs:
        raise ValueError(f"unknown language {expected_lang!r}")
    wrong = 0
    conf_exp, conf_src = [], []
    for text in outputs:
        conf = lid_confidences(model, text)
        wrong += lid_predict(model, text) != expected_lang
        conf_exp.append(conf[expected_lang])
        if source_lang is not None:
            conf_src.append(conf[source_lang])
    return AccidentalTranslationReport(
        wrong / len(outputs),
        float(np.mean(conf_exp)),
        float(np.mean(conf_src)) if source_lang is not None else None)
