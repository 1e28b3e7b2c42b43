"""Per-node polynomial order selection and bookkeeping.

After a half-step each receiving node holds a freshly evolved coefficient
tensor of full cell order. The node's new order m is the smallest one whose
discarded tail (every coefficient with any index above m) is uniformly below
the threshold, measured across the whole variable stack; nodes whose tail
never clears the threshold keep everything the data supports. Coefficients
beyond the selected order are zeroed so lower-order nodes never carry stale
high-order data into later interpolations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class AdaptConfig:
    """Order bounds and the tail tolerance for node order selection."""

    m_min: int = 1
    m_max: int = 3
    eps_ptol: float = 0.0  # 0 disables shrinking: every node keeps m_max

    def __post_init__(self) -> None:
        bad = []
        if self.m_min < 1:
            bad.append("m_min must be at least 1")
        if self.m_max < self.m_min:
            bad.append("m_max must be >= m_min")
        if self.eps_ptol < 0:
            bad.append("eps_ptol must be nonnegative")
        if bad:
            raise ConfigError("; ".join(bad))

    @property
    def fixed(self) -> bool:
        return self.m_min == self.m_max or self.eps_ptol == 0.0


def _tail_profile_1d(data: np.ndarray) -> np.ndarray:
    """tail[t] = max |coefficient| over indices >= t, per node.

    data: (n_vars, n_nodes, n). Returns (n_nodes, n).
    """
    a = np.max(np.abs(data), axis=0)
    return np.maximum.accumulate(a[:, ::-1], axis=1)[:, ::-1]


def _tail_profile_2d(data: np.ndarray) -> np.ndarray:
    """tail[t] = max |coefficient| over the region (k >= t or l >= t)."""
    a = np.max(np.abs(data), axis=0)
    u = np.maximum.accumulate(np.max(a, axis=2)[:, ::-1], axis=1)[:, ::-1]
    v = np.maximum.accumulate(np.max(a, axis=1)[:, ::-1], axis=1)[:, ::-1]
    return np.maximum(u, v)


def select_m(data: np.ndarray, cfg: AdaptConfig) -> np.ndarray:
    """Choose each node's order from a freshly evolved coefficient stack.

    data is (n_vars, n_nodes, n) in 1D or (n_vars, n_nodes, n, n) in 2D,
    where n - 1 is the highest order the evolved polynomials carry. Returns
    the per-node orders, each in [m_min, min(n - 1, m_max)].
    """
    n = data.shape[-1]
    cap = min(n - 1, cfg.m_max)
    n_nodes = data.shape[1]
    if cfg.fixed:
        return np.full(n_nodes, cap, dtype=np.int64)

    tail = _tail_profile_1d(data) if data.ndim == 3 else _tail_profile_2d(data)
    # Candidate m in [m_min, cap); keeping m means dropping tail[m + 1].
    cand = np.arange(cfg.m_min, cap)
    ok = tail[:, cand + 1] <= cfg.eps_ptol
    any_ok = ok.any(axis=1)
    first = np.argmax(ok, axis=1)
    return np.where(any_ok, cfg.m_min + first, cap).astype(np.int64)


def apply_orders(data: np.ndarray, ms: np.ndarray) -> None:
    """Zero every coefficient beyond each node's order, in place.

    data: (n_vars, n_nodes, n) or (n_vars, n_nodes, n, n); ms: (n_nodes,).
    """
    n = data.shape[-1]
    idx = np.arange(n)
    if data.ndim == 3:
        mask = idx[None, :] > ms[:, None]
        data[:, mask] = 0.0
    else:
        over_k = idx[None, :, None] > ms[:, None, None]
        over_l = idx[None, None, :] > ms[:, None, None]
        data[:, over_k | over_l] = 0.0


def dof_count(ms: np.ndarray, n_vars: int) -> int:
    """Stored degrees of freedom: n_vars * (m + 1)^dim summed over nodes."""
    dim = ms.ndim
    return int(n_vars * np.sum((ms.astype(np.int64) + 1) ** dim))


@dataclass(frozen=True)
class MStats:
    """Snapshot of the order distribution on one mesh."""

    counts: dict[int, int]
    dof: int

    @property
    def max_m(self) -> int:
        return max(self.counts)

    @property
    def mean_m(self) -> float:
        total = sum(self.counts.values())
        return sum(m * c for m, c in self.counts.items()) / total


def m_statistics(ms: np.ndarray, n_vars: int) -> MStats:
    values, counts = np.unique(ms, return_counts=True)
    return MStats(
        counts={int(m): int(c) for m, c in zip(values, counts)},
        dof=dof_count(ms, n_vars),
    )
