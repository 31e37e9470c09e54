"""Whitespace-token vocabulary shared across every language in a family."""

from .corpus import ParallelCorpus
from .languages import LanguageSpec

PAD_ID, EOS_ID, UNK_ID = 0, 1, 2
N_SENTINELS = 100
UNK_RENDER = "⟨unk⟩"

TAG_TOKENS = ("NOUN", "VERB", "MOD", "NUM", "NAME")
MARKER_TOKENS = ("story:", "sum:", "title:", "next:")

SPECIALS = (
    ["<pad>", "</s>", "<unk>"]
    + [f"<extra_id_{k}>" for k in range(N_SENTINELS)]
    + list(TAG_TOKENS)
    + list(MARKER_TOKENS)
)


class Vocab:
    def __init__(self, tokens: list[str]):
        self.id_to_token = list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def sentinel(self, k: int) -> int:
        if not 0 <= k < N_SENTINELS:
            raise ValueError(f"sentinel index {k} out of range")
        return 3 + k

    def encode(self, text: str) -> list[int]:
        return [self.token_to_id.get(tok, UNK_ID) for tok in text.split()]

    def decode(self, ids) -> str:
        out = []
        for i in ids:
            i = int(i)
            if i in (PAD_ID, EOS_ID):
                continue
            out.append(UNK_RENDER if i == UNK_ID else self.id_to_token[i])
        return " ".join(out)


def build_vocab(corpus: ParallelCorpus, family: list[LanguageSpec] | None = None) -> Vocab:
    """Specials first, then corpus surface tokens sorted, then any remaining
    cipher surfaces when a family is supplied (so task words such as the
    per-language yes/no answers always encode)."""
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    seen: set[str] = set()
    for lang_id in sorted(corpus.renderings):
        for sentence in corpus.renderings[lang_id]:
            seen.update(sentence.split())
    tokens = list(SPECIALS) + sorted(seen)
    if family is not None:
        extra = {s for spec in family for s in spec.cipher.values()} - seen
        tokens += sorted(extra)
    return Vocab(tokens)


def encode_text(v: Vocab, text: str) -> list[int]:
    return v.encode(text)


def decode_ids(v: Vocab, ids) -> str:
    return v.decode(ids)
