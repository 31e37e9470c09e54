"""Synthetic parallel languages and text-to-text task casting."""

from .languages import (
    ALPHABETS,
    CATEGORIES,
    LanguageSpec,
    N_CONTENT_CONCEPTS,
    NO_ID,
    ORDER_RULES,
    YES_ID,
    category_of,
    family_manifest,
    make_family,
    order_permutation,
    render_concepts,
)
from .grammar import ConceptSentence, continuation_concepts, sample_sentence
from .corpus import ParallelCorpus, generate_parallel_corpus, split_of_index
from .vocab import Vocab, build_vocab, decode_ids, encode_text
from .tasks import (
    ALL_TASKS,
    GEN_STORY,
    GEN_SUM,
    GEN_TASKS,
    GEN_TITLE,
    PAIRCLS,
    SPANX,
    TAG,
    TaskInstance,
    cast_to_text2text,
    export_jsonl,
    gold_label,
    make_task_dataset,
)

__all__ = [
    "ALPHABETS", "CATEGORIES", "LanguageSpec", "N_CONTENT_CONCEPTS",
    "NO_ID", "ORDER_RULES", "YES_ID", "category_of", "family_manifest",
    "make_family", "order_permutation", "render_concepts",
    "ConceptSentence", "continuation_concepts", "sample_sentence",
    "ParallelCorpus", "generate_parallel_corpus", "split_of_index",
    "Vocab", "build_vocab", "decode_ids", "encode_text",
    "ALL_TASKS", "GEN_STORY", "GEN_SUM", "GEN_TASKS", "GEN_TITLE",
    "PAIRCLS", "SPANX", "TAG", "TaskInstance", "cast_to_text2text",
    "export_jsonl", "gold_label", "make_task_dataset",
]
