"""Fine-tuning over a fixed-budget mixture with dense checkpointing.

The loop is position-addressable: epoch order is rebuilt from (seed, epoch)
at any step, so a run resumed from a checkpoint consumes exactly the data
and dropout noise the uninterrupted run would have.
"""

import math
from dataclasses import asdict

from ..model import ModelParams, forward_loss
from ..synthlang.vocab import Vocab
from .checkpoint import Checkpoint
from .loop import (JsonlLogger, TrainConfig, abort_on_bad_loss, encode_pair,
                   epoch_rng, log_step, snapshot_params, stream_rng)
from .mixture import DataMixture
from .optim import OptimizerState, adam_step


def _snapshot_opt(opt: OptimizerState) -> OptimizerState:
    return OptimizerState({k: a.copy() for k, a in opt.m.items()},
                          {k: a.copy() for k, a in opt.v.items()},
                          opt.step, opt.beta1, opt.beta2, opt.eps)


def finetune(p: ModelParams, mix: DataMixture, cfg: TrainConfig, vocab: Vocab,
             probes=None, log_path: str | None = None,
             resume: Checkpoint | None = None) -> tuple[list[Checkpoint], list]:
    """Train on the mixture; returns (checkpoints, XLRS records).

    Checkpoints are cut every cfg.checkpoint_every steps and at each epoch
    end; the probe object (when given) is measured at step 0 and at every
    checkpoint. Pass `resume` (with p = resume.params) to continue a run.
    """
    encoded = [encode_pair(vocab, inst.input_text, inst.target_text)
               for inst in mix.instances()]
    n = len(encoded)
    if n == 0:
        raise ValueError("empty mixture")
    spe = math.ceil(n / cfg.batch_size)
    total = cfg.epochs * spe
    logger = JsonlLogger(log_path)

    srng = stream_rng(cfg.seed)
    if resume is None:
        opt = OptimizerState.init(p)
        start = 0
    else:
        opt = resume.opt
        srng.bit_generator.state = resume.rng_state
        start = resume.step

    records = list(probes.measure(p, 0)) if probes is not None and start == 0 else []
    checkpoints: list[Checkpoint] = []
    order, cur_epoch = None, -1
    for step in range(start + 1, total + 1):
        epoch = (step - 1) // spe
        pos = (step - 1) % spe
        if epoch != cur_epoch:
            order = epoch_rng(cfg.seed, epoch).permutation(n)
            cur_epoch = epoch
        batch = [encoded[j] for j in order[pos * cfg.batch_size:(pos + 1) * cfg.batch_size]]

        p.zero_grad()
        try:
            loss = forward_loss(p, batch, train=True, rng=srng)
            val = loss.item()
            if not math.isfinite(val):
                raise FloatingPointError(f"loss={val}")
            loss.backward()
        except FloatingPointError as e:
            raise abort_on_bad_loss(logger, step, cfg.learning_rate,
                                    mix.source_langs, str(e))
        adam_step(p, {k: t.grad for k, t in p.tensors.items()}, opt, cfg.learning_rate)
        log_step(logger, step, val, cfg.learning_rate, mix.source_langs)

        if step % cfg.checkpoint_every == 0 or pos == spe - 1:
            checkpoints.append(Checkpoint(
                config={"model": asdict(p.cfg), "train": asdict(cfg)},
                step=step,
                params=snapshot_params(p),
                opt=_snapshot_opt(opt),
                rng_state=srng.bit_generator.state,
                provenance={"stage": "finetune", "task": mix.task,
                            "source_langs": mix.source_langs}))
            if probes is not None:
                records.extend(probes.measure(checkpoints[-1].params, step))
    return checkpoints, records
