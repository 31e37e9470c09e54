"""Cross-lingual representation similarity over fixed parallel probe sets."""

import io
from dataclasses import dataclass

import numpy as np

from ..model import ModelParams, encode, mean_pool
from ..synthlang.corpus import ParallelCorpus
from ..synthlang.vocab import Vocab

PROBE_TAG = 0x9A0B
ENCODE_CHUNK = 128


@dataclass
class XLRSRecord:
    step: int
    source_lang: str
    target_lang: str
    value: float
    n_pairs: int


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for a zero vector")
    return float(a @ b / (na * nb))


def _pooled(p: ModelParams, id_lists: list[list[int]]) -> np.ndarray:
    out = []
    for lo in range(0, len(id_lists), ENCODE_CHUNK):
        chunk = id_lists[lo:lo + ENCODE_CHUNK]
        out.append(mean_pool(encode(p, chunk)).data)
    return np.concatenate(out, axis=0)


class XlrsProbe:
    """Aligned sentence pairs sampled once and reused for every checkpoint,
    so per-step values are comparable point for point."""

    def __init__(self, corpus: ParallelCorpus, vocab: Vocab, source: str,
                 targets: list[str], n_sample: int = 512, seed: int = 0,
                 split: str = "test"):
        if n_sample < 1:
            raise ValueError("n_sample must be >= 1")
        for lang in [source] + list(targets):
            if lang not in corpus.renderings:
                raise ValueError(f"corpus has no language {lang!r}")
        idxs = corpus.indices(split)
        rng = np.random.default_rng([seed, PROBE_TAG])
        take = min(n_sample, len(idxs))
        picked = [idxs[j] for j in rng.permutation(len(idxs))[:take]]

        self.source = source
        self.targets = list(targets)
        self.ids: dict[str, list[list[int]]] = {}
        self.n_skipped = 0
        keep: list[int] = []
        for i in picked:
            encs = {lang: vocab.encode(corpus.renderings[lang][i])
                    for lang in [source] + self.targets}
            if any(len(e) == 0 for e in encs.values()):
                self.n_skipped += 1  # unencodable sentence, dropped in all languages
                continue
            keep.append(i)
            for lang, e in encs.items():
                self.ids.setdefault(lang, []).append(e)
        if not keep:
            raise ValueError("probe set is empty after filtering")
        self.n_pairs = len(keep)

    def measure(self, p: ModelParams, step: int) -> list[XLRSRecord]:
        pooled = {lang: _pooled(p, ids) for lang, ids in self.ids.items()}
        src = pooled[self.source]
        out = []
        for t in self.targets:
            vals = [cosine(src[i], pooled[t][i]) for i in range(self.n_pairs)]
            out.append(XLRSRecord(step, self.source, t,
                                  float(np.mean(vals)), self.n_pairs))
        return out


def xlrs(p: ModelParams, corpus: ParallelCorpus, vocab: Vocab, s: str, t: str,
         n_sample: int = 512, seed: int = 0) -> XLRSRecord:
    """One-shot XLRS between languages s and t on the test split."""
    probe = XlrsProbe(corpus, vocab, s, [t], n_sample=n_sample, seed=seed)
    return probe.measure(p, 0)[0]


def xlrs_to_csv(records: list[XLRSRecord]) -> str:
    buf = io.StringIO()
    buf.write("step,source,target,value,n_pairs\n")
    for r in records:
        buf.write(f"{r.step},{r.source_lang},{r.target_lang},{r.value:.10f},{r.n_pairs}\n")
    return buf.getvalue()
