"""Init statistics, masking, loss sanity, overfit oracle, greedy decoding."""

import numpy as np
import pytest

from xlinglab import model as M
from xlinglab import tensorcore as tc
from xlinglab.model import EOS_ID, PAD_ID, EncoderStates, TransformerConfig
from xlinglab.tensorcore import Tensor


def tiny_cfg(vocab=12, d=32, heads=2, ff=48):
    return TransformerConfig(vocab_size=vocab, d_model=d, n_heads=heads,
                             n_enc_layers=1, n_dec_layers=1, d_ff=ff,
                             max_len=16, dropout_rate=0.0)


def adam_fit(p, batch, steps, lr=3e-3):
    """Minimal Adam loop for overfit oracles; returns the loss trace."""
    m = {k: np.zeros_like(t.data) for k, t in p.tensors.items()}
    v = {k: np.zeros_like(t.data) for k, t in p.tensors.items()}
    trace = []
    for t_step in range(1, steps + 1):
        p.zero_grad()
        loss = M.forward_loss(p, batch)
        loss.backward()
        trace.append(loss.item())
        for k, t in p.tensors.items():
            g = t.grad if t.grad is not None else np.zeros_like(t.data)
            m[k] = 0.9 * m[k] + 0.1 * g
            v[k] = 0.999 * v[k] + 0.001 * g * g
            mhat = m[k] / (1 - 0.9 ** t_step)
            vhat = v[k] / (1 - 0.999 ** t_step)
            t.data -= lr * mhat / (np.sqrt(vhat) + 1e-8)
    return trace


# -- init ---------------------------------------------------------------------

def test_init_deterministic_and_shaped():
    cfg = tiny_cfg()
    p1, p2 = M.init_params(cfg, 3), M.init_params(cfg, 3)
    assert p1.names() == p2.names()
    for k in p1.names():
        assert np.array_equal(p1[k].data, p2[k].data)
    assert p1["embedding"].shape == (12, 32)
    assert not np.array_equal(p1["embedding"].data, M.init_params(cfg, 4)["embedding"].data)


def test_init_std_near_inverse_sqrt_d():
    cfg = TransformerConfig(vocab_size=500, d_model=64, n_heads=4)
    p = M.init_params(cfg, 0)
    target = 1.0 / np.sqrt(64)
    for k, t in p.tensors.items():
        if t.data.ndim == 2:
            assert abs(t.data.std() - target) < 0.2 * target, k


def test_config_validation():
    with pytest.raises(ValueError):
        TransformerConfig(vocab_size=100, d_model=30, n_heads=4)
    with pytest.raises(ValueError):
        TransformerConfig(vocab_size=2)
    with pytest.raises(ValueError):
        TransformerConfig(vocab_size=100, dropout_rate=1.0)


# -- encode -------------------------------------------------------------------

def test_encode_shape_and_purity():
    p = M.init_params(tiny_cfg(), 0)
    es = M.encode(p, [4, 5, 6, 7])
    assert es.hidden.shape == (4, 32)
    assert es.mask.tolist() == [True] * 4
    es2 = M.encode(p, [4, 5, 6, 7])
    assert np.array_equal(es.hidden.data, es2.hidden.data)


def test_encode_pad_tail_does_not_change_states():
    p = M.init_params(tiny_cfg(), 0)
    a = M.encode(p, [4, 5, 6])
    b = M.encode(p, [4, 5, 6, PAD_ID, PAD_ID])
    assert np.allclose(a.hidden.data, b.hidden.data[:3], atol=1e-12)
    assert b.mask.tolist() == [True, True, True, False, False]


def test_encode_no_collapse_at_init():
    p = M.init_params(tiny_cfg(), 0)
    a = M.encode(p, [4, 5, 6]).hidden.data
    b = M.encode(p, [7, 8, 9]).hidden.data
    assert np.linalg.norm(a - b) > 0


def test_encode_overlength_errors():
    p = M.init_params(tiny_cfg(), 0)
    with pytest.raises(ValueError):
        M.encode(p, [4] * 17)


# -- mean_pool ----------------------------------------------------------------

def test_mean_pool_single_position():
    p = M.init_params(tiny_cfg(), 0)
    es = M.encode(p, [5])
    assert np.allclose(M.mean_pool(es).data, es.hidden.data[0], atol=1e-15)


def test_mean_pool_arithmetic():
    es = EncoderStates(Tensor([[1.0, 3.0], [3.0, 5.0]]), np.array([True, True]))
    assert np.array_equal(M.mean_pool(es).data, [2.0, 4.0])


def test_mean_pool_ignores_masked_positions():
    es = EncoderStates(Tensor([[1.0, 3.0], [99.0, 99.0]]), np.array([True, False]))
    assert np.array_equal(M.mean_pool(es).data, [1.0, 3.0])
    p = M.init_params(tiny_cfg(), 0)
    a = M.mean_pool(M.encode(p, [4, 5, 6])).data
    b = M.mean_pool(M.encode(p, [4, 5, 6, PAD_ID, PAD_ID])).data
    assert np.allclose(a, b, atol=1e-12)


def test_mean_pool_all_masked_errors():
    es = EncoderStates(Tensor([[1.0, 3.0]]), np.array([False]))
    with pytest.raises(ValueError):
        M.mean_pool(es)


def test_mean_pool_masked_positions_get_no_gradient():
    emb = Tensor(np.random.default_rng(0).normal(size=(3, 2)), requires_grad=True)
    hidden = tc.embedding(emb, np.array([0, 1, 2]))
    es = EncoderStates(hidden, np.array([True, True, False]))
    M.mean_pool(es).sum().backward()
    assert np.array_equal(emb.grad[2], [0.0, 0.0])


# -- forward_loss -------------------------------------------------------------

def test_initial_loss_near_log_vocab():
    cfg = TransformerConfig(vocab_size=200, max_len=16, dropout_rate=0.0)
    p = M.init_params(cfg, 1)
    batch = [([4, 5, 6, 7], [8, 9, EOS_ID]), ([10, 11], [12, EOS_ID])]
    loss = M.forward_loss(p, batch).item()
    assert abs(loss - np.log(200)) < 0.15 * np.log(200)
    assert loss >= 0


def test_duplicated_example_keeps_loss():
    p = M.init_params(tiny_cfg(), 1)
    one = M.forward_loss(p, [([4, 5], [6, EOS_ID])]).item()
    two = M.forward_loss(p, [([4, 5], [6, EOS_ID])] * 2).item()
    assert abs(one - two) < 1e-12


def test_loss_input_validation():
    p = M.init_params(tiny_cfg(), 1)
    with pytest.raises(ValueError):
        M.forward_loss(p, [])
    with pytest.raises(ValueError):
        M.forward_loss(p, [([4, 5], [])])
    with pytest.raises(ValueError):
        M.forward_loss(p, [([4, 5], [6])], train=True)  # no rng supplied


def test_loss_decreases_when_overfitting():
    p = M.init_params(tiny_cfg(), 2)
    batch = [([4, 5, 6], [7, 8, EOS_ID]), ([9, 10], [11, 4, EOS_ID])]
    trace = adam_fit(p, batch, steps=50, lr=3e-3)
    assert trace[-1] < trace[0] * 0.7


def test_dropout_changes_training_loss_only():
    cfg = tiny_cfg()
    cfg.dropout_rate = 0.2
    p = M.init_params(cfg, 3)
    batch = [([4, 5, 6], [7, 8, EOS_ID])]
    eval_a = M.forward_loss(p, batch).item()
    eval_b = M.forward_loss(p, batch).item()
    assert eval_a == eval_b
    r1 = M.forward_loss(p, batch, train=True, rng=np.random.default_rng(0)).item()
    r2 = M.forward_loss(p, batch, train=True, rng=np.random.default_rng(1)).item()
    assert r1 != r2


# -- greedy generation ----------------------------------------------------------

def test_overfit_then_reproduce_target():
    p = M.init_params(tiny_cfg(), 4)
    src, tgt = [4, 5, 6, 7], [8, 9, 10]
    adam_fit(p, [(src, tgt + [EOS_ID])], steps=220, lr=5e-3)
    assert M.greedy_generate(p, src, max_new=8) == tgt


def test_max_new_caps_length():
    p = M.init_params(tiny_cfg(), 5)
    assert len(M.greedy_generate(p, [4, 5], max_new=1)) <= 1
    with pytest.raises(ValueError):
        M.greedy_generate(p, [4, 5], max_new=0)


def test_tie_break_picks_lowest_id():
    p = M.init_params(tiny_cfg(), 6)
    p["embedding"].data[:] = 0.0  # all logits equal -> every step ties
    assert M.greedy_generate(p, [4, 5], max_new=3) == [PAD_ID] * 3


def test_batched_generation_matches_single():
    p = M.init_params(tiny_cfg(), 7)
    inputs = [[4, 5, 6], [7, 8], [9, 10, 11, 4]]
    together = M.greedy_generate_batch(p, inputs, max_new=6)
    alone = [M.greedy_generate(p, s, max_new=6) for s in inputs]
    assert together == alone


# -- end-to-end gradients ---------------------------------------------------------

def test_full_model_gradients_match_finite_differences():
    cfg = TransformerConfig(vocab_size=9, d_model=16, n_heads=2,
                            n_enc_layers=2, n_dec_layers=2, d_ff=24,
                            max_len=8, dropout_rate=0.0)
    p = M.init_params(cfg, 8)
    batch = [([3, 4, 5], [6, 7, EOS_ID]), ([4, 8], [5, EOS_ID])]

    def loss_fn(_):
        return M.forward_loss(p, batch)

    for name in ("embedding", "enc0.attn.wq", "enc1.ln2.gain", "dec0.cross.wv",
                 "dec1.ffn.w2", "dec_final.bias"):
        err = tc.grad_check(lambda _: loss_fn(None), p[name], h=1e-5)
        assert err < 1e-4, f"{name}: {err}"
