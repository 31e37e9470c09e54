"""Shared training-loop plumbing: config, logging, seeding, snapshots.

Seeding scheme: the per-epoch example order comes from a fresh generator
keyed (seed, epoch) so a resumed run can rebuild any epoch's order without
replaying the stream; everything consumed stepwise (dropout masks, span
noise) comes from one stream generator whose state is checkpointed.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from ..model import EOS_ID, ModelParams
from ..synthlang.vocab import Vocab

EPOCH_TAG, STREAM_TAG = 0xE70C, 0xD506


@dataclass
class TrainConfig:
    learning_rate: float = 7e-5
    batch_size: int = 32
    epochs: int = 10
    train_budget: int = 10000
    checkpoint_every: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "epochs", "train_budget", "checkpoint_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def steps_per_epoch(self) -> int:
        return math.ceil(self.train_budget / self.batch_size)


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([seed, EPOCH_TAG, epoch])


def stream_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, STREAM_TAG])


def encode_pair(vocab: Vocab, input_text: str, target_text: str) -> tuple[list[int], list[int]]:
    return vocab.encode(input_text) + [EOS_ID], vocab.encode(target_text) + [EOS_ID]


def snapshot_params(p: ModelParams) -> ModelParams:
    from ..tensorcore import Tensor
    return ModelParams(p.cfg, {k: Tensor(t.data.copy(), requires_grad=True)
                               for k, t in p.tensors.items()})


class JsonlLogger:
    """Appends one JSON object per line; a None path makes it a no-op."""

    def __init__(self, path: str | None):
        self.path = path

    def write(self, row: dict) -> None:
        if self.path is None:
            return
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def log_step(logger: JsonlLogger, step: int, loss: float, lr: float,
             source_langs: list[str]) -> None:
    logger.write({"step": step, "loss": loss, "lr": lr, "source_langs": source_langs})


def abort_on_bad_loss(logger: JsonlLogger, step: int, lr: float,
                      source_langs: list[str], detail: str) -> RuntimeError:
    logger.write({"step": step, "loss": None, "lr": lr,
                  "source_langs": source_langs, "event": "nan_abort",
                  "detail": detail})
    return RuntimeError(f"non-finite loss at step {step}: {detail}")
