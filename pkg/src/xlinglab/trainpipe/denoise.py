"""Span-denoising pretraining over all family languages jointly.

Masking budget is allocated per batch: 15% of the batch's tokens, spread
over sentences (each capped at length-1), grouped into spans of mean length
3 and replaced by sentinels. Targets are sentinel + original-span runs. A
sentence allotted zero masked tokens contributes no training pair.
"""

import math

import numpy as np

from ..model import ModelParams, forward_loss
from ..synthlang.corpus import ParallelCorpus
from ..synthlang.vocab import Vocab
from .loop import (JsonlLogger, TrainConfig, abort_on_bad_loss, encode_pair,
                   epoch_rng, log_step, stream_rng)
from .optim import OptimizerState, adam_step

MASK_RATE = 0.15
MEAN_SPAN = 3


def _allocate(lengths: list[int], rng: np.random.Generator) -> list[int]:
    """Per-sentence masked-token counts summing to 15% of the batch tokens."""
    caps = [n - 1 for n in lengths]
    target = min(int(round(MASK_RATE * sum(lengths))), sum(caps))
    masked = [min(int(MASK_RATE * n), c) for n, c in zip(lengths, caps)]
    open_idx = [i for i, (m, c) in enumerate(zip(masked, caps)) if m < c]
    for _ in range(target - sum(masked)):
        j = int(rng.integers(len(open_idx)))
        i = open_idx[j]
        masked[i] += 1
        if masked[i] >= caps[i]:
            open_idx.pop(j)
    return masked


def _place_spans(length: int, n_masked: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    """(start, size) spans, non-adjacent, covering n_masked positions."""
    n_spans = max(1, int(round(n_masked / MEAN_SPAN)))
    n_spans = min(n_spans, n_masked, length - n_masked + 1)
    base, rem = divmod(n_masked, n_spans)
    sizes = [base + 1] * rem + [base] * (n_spans - rem)
    slack = length - n_masked - (n_spans - 1)
    gaps = rng.multinomial(slack, [1.0 / (n_spans + 1)] * (n_spans + 1))
    spans, pos = [], 0
    for k in range(n_spans):
        pos += int(gaps[k]) + (1 if k > 0 else 0)
        spans.append((pos, sizes[k]))
        pos += sizes[k]
    return spans


def corrupt_tokens(tokens: list[str], n_masked: int,
                   rng: np.random.Generator) -> tuple[list[str], list[str]]:
    """One corrupted (input, target) pair; empty target when n_masked == 0."""
    if n_masked == 0:
        return list(tokens), []
    inp, tgt = [], []
    spans = _place_spans(len(tokens), n_masked, rng)
    cursor = 0
    for k, (start, size) in enumerate(spans):
        inp.extend(tokens[cursor:start])
        inp.append(f"<extra_id_{k}>")
        tgt.append(f"<extra_id_{k}>")
        tgt.extend(tokens[start:start + size])
        cursor = start + size
    inp.extend(tokens[cursor:])
    return inp, tgt


def corrupt_batch(token_lists: list[list[str]],
                  rng: np.random.Generator) -> tuple[list[tuple[list[str], list[str]]], float]:
    """Corrupted pairs for one batch plus the realized masking rate."""
    lengths = [len(t) for t in token_lists]
    masked = _allocate(lengths, rng)
    pairs = []
    for tokens, m in zip(token_lists, masked):
        inp, tgt = corrupt_tokens(tokens, m, rng)
        if tgt:
            pairs.append((inp, tgt))
    return pairs, sum(masked) / sum(lengths)


def pretrain_span_denoise(p: ModelParams, corpus: ParallelCorpus, vocab: Vocab,
                          cfg: TrainConfig, log_path: str | None = None) -> ModelParams:
    langs = sorted(corpus.renderings)
    pool = [(lang, i) for lang in langs for i in corpus.indices("train")]
    if len(pool) < cfg.train_budget:
        raise ValueError(
            f"train budget {cfg.train_budget} exceeds the {len(pool)}-instance pool")

    logger = JsonlLogger(log_path)
    opt = OptimizerState.init(p)
    srng = stream_rng(cfg.seed)
    spe = cfg.steps_per_epoch()
    step = 0
    for epoch in range(cfg.epochs):
        erng = epoch_rng(cfg.seed, epoch)
        order = erng.permutation(len(pool))[:cfg.train_budget]
        for b in range(spe):
            picks = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            token_lists = [corpus.renderings[pool[j][0]][pool[j][1]].split() for j in picks]
            pairs, _ = corrupt_batch(token_lists, erng)
            batch = [encode_pair(vocab, " ".join(i), " ".join(t)) for i, t in pairs]
            step += 1
            p.zero_grad()
            try:
                loss = forward_loss(p, batch, train=True, rng=srng)
                val = loss.item()
                if not math.isfinite(val):
                    raise FloatingPointError(f"loss={val}")
                loss.backward()
            except FloatingPointError as e:
                raise abort_on_bad_loss(logger, step, cfg.learning_rate, langs, str(e))
            adam_step(p, {k: t.grad for k, t in p.tensors.items()}, opt, cfg.learning_rate)
            log_step(logger, step, val, cfg.learning_rate, langs)
    return p
