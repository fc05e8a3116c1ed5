"""Analytic M/M/c oracles and batch statistics for sampler output."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dominating import check_stable


def erlang_c_probability(c: int, lam: float, mu: float) -> float:
    """Probability that an arrival has to wait in a stable M/M/c queue.

    Uses the Erlang-B recurrence, which stays in [0, 1] for any c.
    """
    check_stable(c, lam, mu)
    a = lam / mu
    b = 1.0
    for k in range(1, c + 1):
        b = a * b / (k + a * b)
    rho = a / c
    return b / (1.0 - rho * (1.0 - b))


def erlang_c_wq(c: int, lam: float, mu: float) -> float:
    """Mean equilibrium waiting time in queue for M/M/c."""
    return erlang_c_probability(c, lam, mu) / (c * mu - lam)


@dataclass
class BatchSummary:
    runs: int
    means: np.ndarray
    stderrs: np.ndarray
    cdfs: list  # per coordinate: (sorted x, F(x)) at the pooled order statistics
    extensions: dict  # doublings_condition -> count

    def cdf(self, coord: int):
        return self.cdfs[coord]


def _vectors(batch, m=None, beta=None) -> np.ndarray:
    if beta is not None:
        return np.array([rec.betas[beta] for rec in batch], dtype=float)
    return np.array([rec.samples[0 if m is None else m] for rec in batch], dtype=float)


def summarize(batch, m: int | None = None, beta: float | None = None) -> BatchSummary:
    """Per-coordinate means, standard errors and empirical CDFs of one
    selector (server increment ``m`` or work scaling ``beta``)."""
    batch = list(batch)
    if not batch:
        raise ValueError("cannot summarise an empty batch")
    x = _vectors(batch, m, beta)
    n = len(x)
    means = x.mean(axis=0)
    stderrs = x.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(x.shape[1])
    cdfs = []
    for col in x.T:
        xs = np.unique(col)
        cdfs.append((xs, np.searchsorted(np.sort(col), xs, side="right") / n))
    ext = Counter(rec.doublings_condition for rec in batch)
    return BatchSummary(n, means, stderrs, cdfs, dict(sorted(ext.items())))


def ks_two_sample(xs, ys) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size == 0 or ys.size == 0:
        raise ValueError("both samples must be non-empty")
    res = stats.ks_2samp(xs, ys, method="asymp")
    return float(res.statistic), float(res.pvalue)


def within_se(mean: float, stderr: float, target: float, k: float = 3.0) -> bool:
    return abs(mean - target) <= k * stderr
