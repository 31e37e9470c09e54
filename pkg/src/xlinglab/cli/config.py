"""Experiment config: JSON in, defaults filled, invariants pre-checked.

Validation returns every problem found, not just the first, so a config can
be fixed in one pass.
"""

import copy
import json

from ..synthlang.languages import ALPHABETS, ORDER_RULES
from ..synthlang.tasks import ALL_TASKS

DEFAULT_LANGUAGES = [
    {"lang_id": "src", "alphabet_id": 0, "order_rule": "identity", "lexical_overlap": 0.0},
    {"lang_id": "aux", "alphabet_id": 1, "order_rule": "verb_final", "lexical_overlap": 0.0},
    {"lang_id": "tgt1", "alphabet_id": 2, "order_rule": "reverse", "lexical_overlap": 0.0},
    {"lang_id": "tgt2", "alphabet_id": 3, "order_rule": "identity", "lexical_overlap": 0.0},
    {"lang_id": "tgt3", "alphabet_id": 4, "order_rule": "verb_final", "lexical_overlap": 0.0},
]

DEFAULT_CONFIG = {
    "seed": 0,
    "languages": DEFAULT_LANGUAGES,
    "source_lang": "src",
    "aux_lang": None,
    "target_langs": ["tgt1", "tgt2", "tgt3"],
    "corpus_size": 16000,
    "tasks": list(ALL_TASKS),
    "model": {
        "d_model": 64,
        "n_heads": 4,
        "n_enc_layers": 2,
        "n_dec_layers": 2,
        "d_ff": 128,
        "max_len": 64,
        "dropout_rate": 0.1,
    },
    "pretrain": {
        "learning_rate": 7e-5,
        "batch_size": 32,
        "epochs": 10,
        "train_budget": 10000,
        "checkpoint_every": 100,
    },
    "finetune": {
        "learning_rate": 7e-5,
        "batch_size": 32,
        "epochs": 10,
        "train_budget": 10000,
        "checkpoint_every": 100,
    },
    "xlrs_sample": 512,
    "max_new_tokens": 16,
    "eval_samples": 200,
}


def _merge_defaults(cfg: dict) -> dict:
    out = copy.deepcopy(DEFAULT_CONFIG)
    for key, val in cfg.items():
        if key in ("model", "pretrain", "finetune") and isinstance(val, dict):
            out[key].update(val)
        else:
            out[key] = val
    return out


def _check_languages(cfg: dict, errors: list) -> None:
    langs = cfg["languages"]
    if not isinstance(langs, list) or len(langs) < 2:
        errors.append("languages: need a list of at least 2 languages")
        return
    seen = set()
    for i, spec in enumerate(langs):
        where = f"languages[{i}]"
        if not isinstance(spec, dict):
            errors.append(f"{where}: must be an object")
            continue
        lid = spec.get("lang_id")
        if not isinstance(lid, str) or not lid:
            errors.append(f"{where}.lang_id: must be a non-empty string")
        elif lid in seen:
            errors.append(f"{where}.lang_id: duplicate {lid!r}")
        else:
            seen.add(lid)
        aid = spec.get("alphabet_id")
        if not isinstance(aid, int) or not 0 <= aid < len(ALPHABETS):
            errors.append(f"{where}.alphabet_id: must be an int in [0, {len(ALPHABETS) - 1}]")
        if spec.get("order_rule") not in ORDER_RULES:
            errors.append(f"{where}.order_rule: must be one of {ORDER_RULES}")
        ov = spec.get("lexical_overlap", 0.0)
        if not isinstance(ov, (int, float)) or not 0.0 <= ov <= 1.0:
            errors.append(f"{where}.lexical_overlap: must be in [0, 1]")

    known = seen
    src = cfg["source_lang"]
    if src not in known:
        errors.append(f"source_lang: {src!r} is not a configured language")
    aux = cfg["aux_lang"]
    if aux is not None:
        if aux not in known:
            errors.append(f"aux_lang: {aux!r} is not a configured language")
        elif aux == src:
            errors.append("aux_lang: must differ from source_lang")
    targets = cfg["target_langs"]
    if not isinstance(targets, list) or not targets:
        errors.append("target_langs: need a non-empty list")
    else:
        for t in targets:
            if t not in known:
                errors.append(f"target_langs: {t!r} is not a configured language")
            elif t in (src, aux):
                errors.append(f"target_langs: {t!r} is also a source; targets must be unseen")


def _check_positive(cfg: dict, section: str, fields: tuple, errors: list) -> None:
    block = cfg[section]
    for f in fields:
        v = block.get(f)
        if not isinstance(v, (int, float)) or v <= 0:
            errors.append(f"{section}.{f}: must be positive")


def _check_model(cfg: dict, errors: list) -> None:
    m = cfg["model"]
    _check_positive(cfg, "model",
                    ("d_model", "n_heads", "n_enc_layers", "n_dec_layers",
                     "d_ff", "max_len"), errors)
    d, h = m.get("d_model"), m.get("n_heads")
    if isinstance(d, int) and isinstance(h, int) and h > 0 and d % h != 0:
        errors.append(f"model.d_model: {d} is not divisible by n_heads={h}")
    dr = m.get("dropout_rate")
    if not isinstance(dr, (int, float)) or not 0.0 <= dr < 1.0:
        errors.append("model.dropout_rate: must be in [0, 1)")


def _check_budgets(cfg: dict, errors: list) -> None:
    n = cfg["corpus_size"]
    if not isinstance(n, int) or n < 50:
        errors.append("corpus_size: must be an int >= 50")
        return
    n_langs = len(cfg["languages"]) if isinstance(cfg["languages"], list) else 0
    # the hash split yields roughly 80% train; use a conservative 75% bound
    pool = int(0.75 * n) * n_langs
    if cfg["pretrain"].get("train_budget", 0) > pool:
        errors.append(
            f"pretrain.train_budget: exceeds the ~{pool} instances available "
            f"({n_langs} languages x 75% of corpus_size)")
    if cfg["finetune"].get("train_budget", 0) > int(0.75 * n):
        errors.append(
            f"finetune.train_budget: exceeds the ~{int(0.75 * n)} training "
            "instances available per source language")


def validate_config(path: str) -> tuple[dict, list]:
    """Returns (normalized config, error list); the config is only usable
    when the error list is empty."""
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as e:
        return {}, [f"cannot read config: {e}"]
    except json.JSONDecodeError as e:
        return {}, [f"config is not valid JSON: {e}"]
    if not isinstance(raw, dict):
        return {}, ["config root must be a JSON object"]

    errors = []
    for key in raw:
        if key not in DEFAULT_CONFIG:
            errors.append(f"unknown config key {key!r}")
    cfg = _merge_defaults(raw)

    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        errors.append("seed: must be a non-negative int")
    _check_languages(cfg, errors)

    tasks = cfg["tasks"]
    if not isinstance(tasks, list) or not tasks:
        errors.append("tasks: need a non-empty list")
    else:
        for t in tasks:
            if t not in ALL_TASKS:
                errors.append(f"tasks: unknown task {t!r}")

    _check_model(cfg, errors)
    for section in ("pretrain", "finetune"):
        _check_positive(cfg, section,
                        ("learning_rate", "batch_size", "epochs",
                         "train_budget", "checkpoint_every"), errors)
    _check_budgets(cfg, errors)

    for f in ("xlrs_sample", "max_new_tokens", "eval_samples"):
        if not isinstance(cfg[f], int) or cfg[f] < 1:
            errors.append(f"{f}: must be an int >= 1")
    return cfg, errors
