"""One-dimensional k-means binning of cavity frequencies."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Binning:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    degenerate: bool = False


def kmeans_bin(values, k: int, seed: Optional[int] = None) -> Binning:
    """Globally optimal 1-D k-means by dynamic programming over sorted values.

    In one dimension optimal clusters are contiguous in sorted order, so the
    exact minimum of the within-bin sum of squares is found in O(k n^2)
    without any random initialisation; ``seed`` is accepted for interface
    symmetry and has no effect. Labels are ordered by bin centre.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    order = np.argsort(x, kind="stable")
    xs = x[order]
    distinct = np.unique(xs).size
    degenerate = distinct < k
    k_eff = min(k, distinct)

    c1 = np.concatenate([[0.0], np.cumsum(xs)])
    c2 = np.concatenate([[0.0], np.cumsum(xs * xs)])

    def cost(i, j):  # sum of squares of xs[i:j], vectorised over i
        m = j - i
        s = c1[j] - c1[i]
        return np.maximum(c2[j] - c2[i] - s * s / m, 0.0)

    inf = np.inf
    dp = np.full((k_eff + 1, n + 1), inf)
    arg = np.zeros((k_eff + 1, n + 1), dtype=int)
    dp[0, 0] = 0.0
    for c in range(1, k_eff + 1):
        for j in range(c, n + 1):
            i = np.arange(c - 1, j)
            tot = dp[c - 1, i] + cost(i, j)
            b = int(np.argmin(tot))
            dp[c, j] = tot[b]
            arg[c, j] = i[b]
    bounds = [n]
    j = n
    for c in range(k_eff, 0, -1):
        j = arg[c, j]
        bounds.append(j)
    bounds = bounds[::-1]
    labels_sorted = np.empty(n, dtype=int)
    centers = np.empty(k_eff)
    for b in range(k_eff):
        lo, hi = bounds[b], bounds[b + 1]
        labels_sorted[lo:hi] = b
        centers[b] = xs[lo:hi].mean()
    labels = np.empty(n, dtype=int)
    labels[order] = labels_sorted
    return Binning(labels=labels, centers=centers, inertia=float(dp[k_eff, n]), degenerate=degenerate)
