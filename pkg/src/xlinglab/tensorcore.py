"""Minimal dense-tensor math with reverse-mode autodiff.

Float64 everywhere, row-major numpy buffers. The op set is the smallest one
that supports a small encoder-decoder transformer: matmul (batched), add/mul
with bias-style broadcasting, relu, softmax / log-softmax over the last axis,
layer norm, embedding lookup, reshape/transpose, index picking, and scalar
reductions. Every differentiable op carries its gradient rule as a closure;
`Tensor.backward()` runs them in reverse topological order.

Finite-difference verification lives here too (`grad_check`), so the library
can certify its own gradient rules.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "GraphError",
    "set_nan_guard",
    "nan_guard_enabled",
    "matmul",
    "softmax",
    "log_softmax",
    "layer_norm",
    "relu",
    "embedding",
    "pick",
    "dropout_mask",
    "grad_check",
]

# Module-wide debug switch: when on, every op output is scanned for NaN/Inf.
_NAN_GUARD = True


def set_nan_guard(enabled: bool) -> None:
    global _NAN_GUARD
    _NAN_GUARD = bool(enabled)


def nan_guard_enabled() -> bool:
    return _NAN_GUARD


class GraphError(RuntimeError):
    """Raised on misuse of the autodiff graph (e.g. backward twice)."""


class Tensor:
    """A float64 array plus the graph edges needed for reverse-mode autodiff.

    Tensors are treated as immutable values by forward ops; mutating `.data`
    is reserved for the optimizer, between graph constructions.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_backward_done")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], None] | None = None
        self._backward_done = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    # -- graph construction ------------------------------------------------

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, seed: float = 1.0) -> None:
        """Fill `.grad` on every reachable tensor with requires_grad.

        `seed` scales the upstream gradient of the (scalar) root; backward is
        linear in it. Calling backward twice on the same root without
        rebuilding the graph is an error.
        """
        if self.data.size != 1:
            raise GraphError("backward requires a scalar root")
        if self._backward_done:
            raise GraphError("backward already ran on this graph; rebuild it before calling again")
        self._backward_done = True

        order = _topo_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.full_like(self.data, float(seed))}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                node._accumulate(g)
            if node._backward is None:
                continue
            for parent, pg in node._backward(g):
                if not (parent.requires_grad or parent._parents):
                    continue
                acc = grads.get(id(parent))
                if acc is None:
                    grads[id(parent)] = pg.copy() if pg.base is not None or pg is g else pg
                else:
                    acc += pg


def _topo_order(root: Tensor) -> list[Tensor]:
    # Iterative DFS; graphs from long training sequences overflow recursion.
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _make(data: np.ndarray, parents: Iterable[Tensor],
          backward: Callable[[np.ndarray], list[tuple[Tensor, np.ndarray]]] | None) -> Tensor:
    if _NAN_GUARD and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite values produced by a forward op")
    parents = tuple(parents)
    out = Tensor(data)
    track = any(p.requires_grad or p._parents for p in parents)
    if track:
        out._parents = parents
        out._backward = backward
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `g` down to `shape` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    axes = tuple(i for i, (gs, ts) in enumerate(zip(g.shape, shape)) if ts == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- arithmetic --------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data

    def bw(g):
        return [(a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(g, b.data.shape))]

    return _make(out, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data - b.data

    def bw(g):
        return [(a, _unbroadcast(g, a.data.shape)), (b, _unbroadcast(-g, b.data.shape))]

    return _make(out, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data * b.data

    def bw(g):
        return [(a, _unbroadcast(g * b.data, a.data.shape)),
                (b, _unbroadcast(g * a.data, b.data.shape))]

    return _make(out, (a, b), bw)


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return _make(-a.data, (a,), lambda g: [(a, -g)])


Tensor.__add__ = lambda self, other: add(self, other)
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = lambda self, other: sub(self, other)
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = lambda self, other: mul(self, other)
Tensor.__rmul__ = lambda self, other: mul(other, self)
Tensor.__neg__ = lambda self: neg(self)
Tensor.__matmul__ = lambda self, other: matmul(self, other)


def matmul(a, b) -> Tensor:
    """Matrix product; leading batch dims follow numpy matmul broadcasting."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape[-1] != b.data.shape[-2 if b.data.ndim > 1 else 0]:
        raise ValueError(f"matmul inner dims disagree: {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def bw(g):
        if b.data.ndim == 1:
            ga = np.outer(g, b.data) if a.data.ndim == 2 else g[..., None] * b.data
            gb = a.data.T @ g if a.data.ndim == 2 else (a.data * g[..., None]).sum(axis=tuple(range(a.data.ndim - 1)))
            return [(a, ga.reshape(a.data.shape)), (b, gb)]
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return [(a, _unbroadcast(ga, a.data.shape)), (b, _unbroadcast(gb, b.data.shape))]

    return _make(out, (a, b), bw)


def relu(x) -> Tensor:
    x = _as_tensor(x)
    keep = x.data > 0
    return _make(np.where(keep, x.data, 0.0), (x,), lambda g: [(x, g * keep)])


def softmax(x, axis: int = -1) -> Tensor:
    """Stable softmax: rows sum to 1; max is subtracted before exponentiation."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        dot = (g * s).sum(axis=axis, keepdims=True)
        return [(x, (g - dot) * s)]

    return _make(s, (x,), bw)


def log_softmax(x, axis: int = -1) -> Tensor:
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    logp = shifted - lse

    def bw(g):
        p = np.exp(logp)
        return [(x, g - p * g.sum(axis=axis, keepdims=True))]

    return _make(logp, (x,), bw)


def layer_norm(x, gain, bias, eps: float = 1e-6) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    x, gain, bias = _as_tensor(x), _as_tensor(gain), _as_tensor(bias)
    d = x.data.shape[-1]
    if d < 1:
        raise ValueError("layer_norm needs a non-empty last axis")
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = gain.data * xhat + bias.data

    def bw(g):
        gxhat = g * gain.data
        # d/dx of (x - mu) / sqrt(var + eps), var and mu both functions of x
        gvar = (gxhat * xc).sum(axis=-1, keepdims=True) * (-0.5) * inv ** 3
        gmu = -(gxhat.sum(axis=-1, keepdims=True)) * inv + gvar * (-2.0 / d) * xc.sum(axis=-1, keepdims=True)
        gx = gxhat * inv + gvar * (2.0 / d) * xc + gmu / d
        lead = tuple(range(g.ndim - 1))
        ggain = (g * xhat).sum(axis=lead) if lead else g * xhat
        gbias = g.sum(axis=lead) if lead else g
        return [(x, gx), (gain, _unbroadcast(ggain, gain.data.shape)),
                (bias, _unbroadcast(gbias, bias.data.shape))]

    return _make(out, (x, gain, bias), bw)


def embedding(table, ids: np.ndarray) -> Tensor:
    """Row lookup `table[ids]`; gradient scatter-adds into the table."""
    table = _as_tensor(table)
    ids = np.asarray(ids)
    out = table.data[ids]

    def bw(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids, g)
        return [(table, gt)]

    return _make(out, (table,), bw)


def pick(x, idx: np.ndarray) -> Tensor:
    """Select along the last axis: out[...] = x[..., idx[...]]."""
    x = _as_tensor(x)
    idx = np.asarray(idx)
    out = np.take_along_axis(x.data, idx[..., None], axis=-1)[..., 0]

    def bw(g):
        gx = np.zeros_like(x.data)
        np.put_along_axis(gx, idx[..., None], g[..., None], axis=-1)
        return [(x, gx)]

    return _make(out, (x,), bw)


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = _as_tensor(x)
    shape = tuple(shape)
    return _make(x.data.reshape(shape), (x,), lambda g: [(x, g.reshape(x.data.shape))])


def transpose(x, axes: Sequence[int]) -> Tensor:
    x = _as_tensor(x)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(x.data.transpose(axes), (x,), lambda g: [(x, g.transpose(inv))])


def tsum(x) -> Tensor:
    x = _as_tensor(x)
    return _make(np.asarray(x.data.sum()), (x,), lambda g: [(x, np.broadcast_to(g, x.data.shape))])


def tmean(x) -> Tensor:
    x = _as_tensor(x)
    n = x.data.size
    return _make(np.asarray(x.data.mean()), (x,),
                 lambda g: [(x, np.broadcast_to(g / n, x.data.shape))])


Tensor.reshape = lambda self, shape: reshape(self, shape)
Tensor.transpose = lambda self, axes: transpose(self, axes)
Tensor.sum = lambda self: tsum(self)
Tensor.mean = lambda self: tmean(self)


def dropout_mask(rng: np.random.Generator, shape: tuple[int, ...], rate: float) -> np.ndarray:
    """Inverted-dropout multiplier: 0 with prob `rate`, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1): {rate}")
    if rate == 0.0:
        return np.ones(shape)
    return (rng.random(shape) >= rate) / (1.0 - rate)


# -- finite-difference verification ------------------------------------------


def grad_check(f: Callable[[Tensor], Tensor], theta: Tensor, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    `f` must rebuild its graph on every call (it receives `theta` and returns
    a scalar Tensor). The per-coordinate error is |a - n| / max(1, |a|, |n|),
    so near-zero gradients are compared absolutely.
    """
    if h <= 0:
        raise ValueError(f"step size must be positive: {h}")
    theta.requires_grad = True
    theta.zero_grad()
    out = f(theta)
    out.backward()
    if theta.grad is None:
        raise GraphError("f does not depend on theta")
    analytic = theta.grad.copy()

    numeric = np.zeros_like(theta.data)
    flat = theta.data.reshape(-1)
    nflat = numeric.reshape(-1)
    theta.requires_grad = False  # skip graph construction in the FD loop
    try:
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(f(theta).data)
            flat[i] = orig - h
            fm = float(f(theta).data)
            flat[i] = orig
            nflat[i] = (fp - fm) / (2.0 * h)
    finally:
        theta.requires_grad = True

    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom)) if flat.size else 0.0
