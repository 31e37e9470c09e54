"""Bias-corrected Adam over the named parameter table."""

import numpy as np

from ..model import ModelParams


class OptimizerState:
    def __init__(self, m: dict, v: dict, step: int = 0,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = m
        self.v = v
        self.step = step
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    @classmethod
    def init(cls, p: ModelParams) -> "OptimizerState":
        return cls({k: np.zeros_like(t.data) for k, t in p.tensors.items()},
                   {k: np.zeros_like(t.data) for k, t in p.tensors.items()})


def adam_step(p: ModelParams, grads: dict, st: OptimizerState,
              lr: float) -> tuple[ModelParams, OptimizerState]:
    """One in-place update; a missing or None gradient counts as zero."""
    st.step += 1
    b1, b2 = st.beta1, st.beta2
    for name, t in p.tensors.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(t.data)
        if g.shape != t.data.shape:
            raise ValueError(f"{name}: gradient shape {g.shape} != {t.data.shape}")
        st.m[name] = b1 * st.m[name] + (1 - b1) * g
        st.v[name] = b2 * st.v[name] + (1 - b2) * g * g
        mhat = st.m[name] / (1 - b1 ** st.step)
        vhat = st.v[name] / (1 - b2 ** st.step)
        t.data -= lr * mhat / (np.sqrt(vhat) + st.eps)
    return p, st
