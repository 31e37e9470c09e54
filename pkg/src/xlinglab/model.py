"""Toy encoder-decoder transformer on the tensorcore autodiff engine.

Pre-norm blocks, fixed sinusoidal positions, one embedding matrix shared by
the encoder input, decoder input, and output projection (logits are scaled
by 1/sqrt(d_model) so the initial loss sits near ln(vocab)). Greedy decoding
breaks argmax ties toward the lowest token id. Layer-norm gains start at one
and biases at zero; every weight matrix is scaled-normal with std
1/sqrt(d_model).
"""

from dataclasses import dataclass

import numpy as np

from . import tensorcore as tc
from .tensorcore import Tensor

PAD_ID, EOS_ID = 0, 1
NEG_INF = -1e9


@dataclass
class TransformerConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_enc_layers: int = 2
    n_dec_layers: int = 2
    d_ff: int = 128
    max_len: int = 64
    dropout_rate: float = 0.1

    def __post_init__(self):
        if self.vocab_size < 3:
            raise ValueError("vocab_size must cover pad/eos/unk")
        for name in ("d_model", "n_heads", "n_enc_layers", "n_dec_layers", "d_ff", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")


class ModelParams:
    """Named tensor table; insertion order is the canonical serialization order."""

    def __init__(self, cfg: TransformerConfig, tensors: dict[str, Tensor]):
        self.cfg = cfg
        self.tensors = tensors

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def n_params(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.zero_grad()


def init_params(cfg: TransformerConfig, seed: int) -> ModelParams:
    rng = np.random.default_rng(seed)
    std = 1.0 / np.sqrt(cfg.d_model)
    tensors: dict[str, Tensor] = {}

    def mat(name, shape):
        tensors[name] = Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)

    def ln(name):
        tensors[f"{name}.gain"] = Tensor(np.ones(cfg.d_model), requires_grad=True)
        tensors[f"{name}.bias"] = Tensor(np.zeros(cfg.d_model), requires_grad=True)

    mat("embedding", (cfg.vocab_size, cfg.d_model))
    for i in range(cfg.n_enc_layers):
        for w in ("wq", "wk", "wv", "wo"):
            mat(f"enc{i}.attn.{w}", (cfg.d_model, cfg.d_model))
        ln(f"enc{i}.ln1")
        mat(f"enc{i}.ffn.w1", (cfg.d_model, cfg.d_ff))
        mat(f"enc{i}.ffn.w2", (cfg.d_ff, cfg.d_model))
        ln(f"enc{i}.ln2")
    ln("enc_final")
    for i in range(cfg.n_dec_layers):
        for w in ("wq", "wk", "wv", "wo"):
            mat(f"dec{i}.self.{w}", (cfg.d_model, cfg.d_model))
        ln(f"dec{i}.ln1")
        for w in ("wq", "wk", "wv", "wo"):
            mat(f"dec{i}.cross.{w}", (cfg.d_model, cfg.d_model))
        ln(f"dec{i}.ln2")
        mat(f"dec{i}.ffn.w1", (cfg.d_model, cfg.d_ff))
        mat(f"dec{i}.ffn.w2", (cfg.d_ff, cfg.d_model))
        ln(f"dec{i}.ln3")
    ln("dec_final")
    return ModelParams(cfg, tensors)


@dataclass
class EncoderStates:
    hidden: Tensor          # (L, d) for one sentence, (B, L, d) for a batch
    mask: np.ndarray        # matching (L,) or (B, L) validity flags


def _sinusoid(n_pos: int, d_model: int) -> np.ndarray:
    pos = np.arange(n_pos)[:, None]
    dim = np.arange(d_model)[None, :]
    angle = pos / np.power(10000.0, (2 * (dim // 2)) / d_model)
    table = np.where(dim % 2 == 0, np.sin(angle), np.cos(angle))
    return table


def _pad_ids(seqs: list, pad: int = PAD_ID) -> np.ndarray:
    n = max(len(s) for s in seqs)
    out = np.full((len(seqs), n), pad, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def _maybe_drop(x: Tensor, cfg: TransformerConfig, train: bool, rng) -> Tensor:
    if not train or cfg.dropout_rate == 0.0:
        return x
    return x * Tensor(tc.dropout_mask(rng, x.shape, cfg.dropout_rate))


def _attention(p: ModelParams, prefix: str, q_in: Tensor, kv_in: Tensor,
               add_mask: np.ndarray) -> Tensor:
    cfg = p.cfg
    dh = cfg.d_model // cfg.n_heads
    b, lq = q_in.shape[0], q_in.shape[1]
    lk = kv_in.shape[1]

    def heads(x, l):
        return tc.transpose(tc.reshape(x, (b, l, cfg.n_heads, dh)), (0, 2, 1, 3))

    q = heads(tc.matmul(q_in, p[f"{prefix}.wq"]), lq)
    k = heads(tc.matmul(kv_in, p[f"{prefix}.wk"]), lk)
    v = heads(tc.matmul(kv_in, p[f"{prefix}.wv"]), lk)

    scores = tc.matmul(q, tc.transpose(k, (0, 1, 3, 2))) * (1.0 / np.sqrt(dh))
    scores = scores + Tensor(add_mask)
    ctx = tc.matmul(tc.softmax(scores), v)
    ctx = tc.reshape(tc.transpose(ctx, (0, 2, 1, 3)), (b, lq, cfg.d_model))
    return tc.matmul(ctx, p[f"{prefix}.wo"])


def _embed(p: ModelParams, ids: np.ndarray, cfg: TransformerConfig,
           train: bool, rng) -> Tensor:
    x = tc.embedding(p["embedding"], ids) * np.sqrt(cfg.d_model)
    x = x + Tensor(_sinusoid(ids.shape[1], cfg.d_model)[None, :, :])
    return _maybe_drop(x, cfg, train, rng)


def _ln(p: ModelParams, name: str, x: Tensor) -> Tensor:
    return tc.layer_norm(x, p[f"{name}.gain"], p[f"{name}.bias"])


def _encode_core(p: ModelParams, ids: np.ndarray, train: bool, rng) -> tuple[Tensor, np.ndarray]:
    cfg = p.cfg
    if ids.shape[1] > cfg.max_len:
        raise ValueError(f"sequence length {ids.shape[1]} exceeds max_len {cfg.max_len}")
    valid = ids != PAD_ID
    key_mask = np.where(valid, 0.0, NEG_INF)[:, None, None, :]

    x = _embed(p, ids, cfg, train, rng)
    for i in range(cfg.n_enc_layers):
        h = _ln(p, f"enc{i}.ln1", x)
        x = x + _maybe_drop(_attention(p, f"enc{i}.attn", h, h, key_mask), cfg, train, rng)
        h = _ln(p, f"enc{i}.ln2", x)
        f = tc.matmul(tc.relu(tc.matmul(h, p[f"enc{i}.ffn.w1"])), p[f"enc{i}.ffn.w2"])
        x = x + _maybe_drop(f, cfg, train, rng)
    return _ln(p, "enc_final", x), valid


def _decode_core(p: ModelParams, dec_ids: np.ndarray, enc_h: Tensor,
                 enc_valid: np.ndarray, train: bool, rng) -> Tensor:
    cfg = p.cfg
    if dec_ids.shape[1] > cfg.max_len:
        raise ValueError(f"sequence length {dec_ids.shape[1]} exceeds max_len {cfg.max_len}")
    t = dec_ids.shape[1]
    causal = np.where(np.triu(np.ones((t, t)), k=1) > 0, NEG_INF, 0.0)[None, None, :, :]
    cross_mask = np.where(enc_valid, 0.0, NEG_INF)[:, None, None, :]

    x = _embed(p, dec_ids, cfg, train, rng)
    for i in range(cfg.n_dec_layers):
        h = _ln(p, f"dec{i}.ln1", x)
        x = x + _maybe_drop(_attention(p, f"dec{i}.self", h, h, causal), cfg, train, rng)
        h = _ln(p, f"dec{i}.ln2", x)
        x = x + _maybe_drop(_attention(p, f"dec{i}.cross", h, enc_h, cross_mask), cfg, train, rng)
        h = _ln(p, f"dec{i}.ln3", x)
        f = tc.matmul(tc.relu(tc.matmul(h, p[f"dec{i}.ffn.w1"])), p[f"dec{i}.ffn.w2"])
        x = x + _maybe_drop(f, cfg, train, rng)
    return _ln(p, "dec_final", x)


def _logits(p: ModelParams, dec_h: Tensor) -> Tensor:
    emb_t = tc.transpose(p["embedding"], (1, 0))
    return tc.matmul(dec_h, emb_t) * (1.0 / np.sqrt(p.cfg.d_model))


def encode(p: ModelParams, ids, train: bool = False, rng=None) -> EncoderStates:
    """Encoder states for one sentence (1-D ids) or a batch (list of lists)."""
    if len(ids) == 0:
        raise ValueError("encode needs at least one token")
    single = np.ndim(ids[0]) == 0
    ids2d = _pad_ids([list(ids)] if single else [list(s) for s in ids])
    if (ids2d != PAD_ID).sum() == 0:
        raise ValueError("encode needs at least one non-pad token")
    hidden, valid = _encode_core(p, ids2d, train, rng)
    if single:
        return EncoderStates(tc.reshape(hidden, hidden.shape[1:]), valid[0])
    return EncoderStates(hidden, valid)


def mean_pool(es: EncoderStates) -> Tensor:
    """Mean over unmasked positions; (d,) for one sentence, (B, d) for a batch."""
    single = es.hidden.data.ndim == 2
    hidden = tc.reshape(es.hidden, (1,) + es.hidden.shape) if single else es.hidden
    mask = es.mask[None, :] if single else es.mask
    counts = mask.sum(axis=1)
    if (counts == 0).any():
        raise ValueError("mean_pool needs at least one unmasked position per row")
    weights = (mask / counts[:, None])[:, None, :]  # (B, 1, L)
    pooled = tc.matmul(Tensor(weights), hidden)     # (B, 1, d)
    pooled = tc.reshape(pooled, (pooled.shape[0], pooled.shape[2]))
    return tc.reshape(pooled, (pooled.shape[1],)) if single else pooled


def forward_loss(p: ModelParams, batch: list, train: bool = False, rng=None) -> Tensor:
    """Teacher-forced cross-entropy, mean over non-pad target tokens."""
    if not batch:
        raise ValueError("batch is empty")
    if any(len(t) == 0 for _, t in batch):
        raise ValueError("empty target sequence")
    if train and rng is None:
        raise ValueError("training mode needs an rng for dropout")
    enc_ids = _pad_ids([list(src) for src, _ in batch])
    tgt_ids = _pad_ids([list(tgt) for _, tgt in batch])

    dec_in = np.full_like(tgt_ids, PAD_ID)
    dec_in[:, 1:] = tgt_ids[:, :-1]

    enc_h, enc_valid = _encode_core(p, enc_ids, train, rng)
    dec_h = _decode_core(p, dec_in, enc_h, enc_valid, train, rng)
    logp = tc.log_softmax(_logits(p, dec_h))
    nll = -tc.pick(logp, tgt_ids)

    mask = (tgt_ids != PAD_ID).astype(np.float64)
    return (nll * Tensor(mask)).sum() * (1.0 / mask.sum())


def greedy_generate(p: ModelParams, input_ids, max_new: int) -> list[int]:
    return greedy_generate_batch(p, [list(input_ids)], max_new)[0]


def greedy_generate_batch(p: ModelParams, inputs: list, max_new: int) -> list[list[int]]:
    """Step-wise argmax decoding; stops each row at eos (eos not returned)."""
    if max_new < 1:
        raise ValueError("max_new must be >= 1")
    enc_ids = _pad_ids([list(s) for s in inputs])
    enc_h, enc_valid = _encode_core(p, enc_ids, train=False, rng=None)

    b = len(inputs)
    dec = np.full((b, 1), PAD_ID, dtype=np.int64)
    done = np.zeros(b, dtype=bool)
    out: list[list[int]] = [[] for _ in range(b)]
    for _ in range(max_new):
        dec_h = _decode_core(p, dec, enc_h, enc_valid, train=False, rng=None)
        logits = _logits(p, dec_h).data[:, -1, :]
        nxt = np.argmax(logits, axis=-1)  # first (lowest id) wins ties
        for i in range(b):
            if not done[i]:
                if nxt[i] == EOS_ID:
                    done[i] = True
                else:
                    out[i].append(int(nxt[i]))
        if done.all() or dec.shape[1] >= p.cfg.max_len:
            break
        dec = np.concatenate([dec, nxt[:, None]], axis=1)
    return out
