"""Spearman rank correlation with a two-sided permutation test."""

from dataclasses import dataclass

import numpy as np

PERM_TAG = 0x5EA2


@dataclass
class CorrelationResult:
    rho: float
    p_value: float
    n: int


def _ranks(x: np.ndarray) -> np.ndarray:
    """Average ranks (1-based), ties shared."""
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    sx = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    return float((a @ b) / np.sqrt((a @ a) * (b @ b)))


def spearman_rho(x, y, n_perm: int = 10000, seed: int = 0) -> CorrelationResult:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length 1-D series")
    n = len(x)
    if n < 3:
        raise ValueError("need at least 3 points")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("constant series: rho undefined")

    rx, ry = _ranks(x), _ranks(y)
    rho = _pearson(rx, ry)

    rng = np.random.default_rng([seed, PERM_TAG])
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    denom = np.sqrt((rxc @ rxc) * (ryc @ ryc))
    perms = rng.permuted(np.tile(ryc, (n_perm, 1)), axis=1)
    rho_perm = perms @ rxc / denom
    hits = int(np.sum(np.abs(rho_perm) >= abs(rho) - 1e-12))
    p = (1 + hits) / (n_perm + 1)
    return CorrelationResult(rho, p, n)
