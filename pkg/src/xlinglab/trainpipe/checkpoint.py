"""Binary checkpoint persistence.

Layout: magic "XLCK", u32 LE version (1), u64 LE header length, UTF-8 JSON
header (config, step, provenance, optimizer scalars, RNG state, ordered
tensor name/shape table), then each tensor's raw little-endian float64
payload in header order. Tensor names are prefixed param:/adam_m:/adam_v:.
"""

import json
import struct
from dataclasses import dataclass

import numpy as np

from ..model import ModelParams, TransformerConfig
from ..tensorcore import Tensor
from .optim import OptimizerState

MAGIC = b"XLCK"
VERSION = 1


class CheckpointError(Exception):
    pass


@dataclass
class Checkpoint:
    config: dict
    step: int
    params: ModelParams
    opt: OptimizerState
    rng_state: dict
    provenance: dict


def _tensor_table(ck: Checkpoint) -> list[tuple[str, np.ndarray]]:
    names = ck.params.names()
    table = [(f"param:{k}", ck.params[k].data) for k in names]
    table += [(f"adam_m:{k}", ck.opt.m[k]) for k in names]
    table += [(f"adam_v:{k}", ck.opt.v[k]) for k in names]
    return table


def save_checkpoint(ck: Checkpoint, path: str) -> None:
    table = _tensor_table(ck)
    header = {
        "config": ck.config,
        "step": ck.step,
        "provenance": ck.provenance,
        "optimizer": {"step": ck.opt.step, "beta1": ck.opt.beta1,
                      "beta2": ck.opt.beta2, "eps": ck.opt.eps},
        "rng_state": ck.rng_state,
        "tensors": [{"name": n, "shape": list(a.shape)} for n, a in table],
    }
    blob = json.dumps(header, ensure_ascii=False, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for _, arr in table:
            f.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != VERSION:
        raise CheckpointError(f"unsupported version {version}")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    if len(raw) < 16 + hlen:
        raise CheckpointError("truncated header")
    try:
        header = json.loads(raw[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt header: {e}") from e

    offset = 16 + hlen
    arrays: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        nbytes = 8 * int(np.prod(shape, dtype=np.int64)) if shape else 8
        chunk = raw[offset:offset + nbytes]
        if len(chunk) < nbytes:
            raise CheckpointError(f"truncated payload at tensor {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{len(raw) - offset} trailing bytes")

    cfg = TransformerConfig(**header["config"]["model"])
    tensors = {}
    for entry in header["tensors"]:
        name = entry["name"]
        if name.startswith("param:"):
            tensors[name[len("param:"):]] = Tensor(arrays[name], requires_grad=True)
    params = ModelParams(cfg, tensors)
    opt_meta = header["optimizer"]
    opt = OptimizerState(
        m={k: arrays[f"adam_m:{k}"] for k in tensors},
        v={k: arrays[f"adam_v:{k}"] for k in tensors},
        step=opt_meta["step"], beta1=opt_meta["beta1"],
        beta2=opt_meta["beta2"], eps=opt_meta["eps"])
    return Checkpoint(header["config"], header["step"], params, opt,
                      header["rng_state"], header["provenance"])
