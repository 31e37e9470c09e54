"""Training pipeline: Adam, span-denoising pretraining, fine-tuning, checkpoints."""

from .optim import OptimizerState, adam_step
from .loop import TrainConfig, encode_pair, snapshot_params
from .denoise import corrupt_batch, corrupt_tokens, pretrain_span_denoise
from .mixture import DataMixture, mix_sources
from .finetune import finetune
from .checkpoint import Checkpoint, CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "OptimizerState", "adam_step",
    "TrainConfig", "encode_pair", "snapshot_params",
    "corrupt_batch", "corrupt_tokens", "pretrain_span_denoise",
    "DataMixture", "mix_sources",
    "finetune",
    "Checkpoint", "CheckpointError", "load_checkpoint", "save_checkpoint",
]
