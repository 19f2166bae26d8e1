"""Spearman and Pearson correlation with tie handling, p-values and Fisher intervals.

Both statistics return ``None`` when either input is constant: the correlation
is undefined there and callers must be able to tell that apart from zero.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats as _st

SPEARMAN = "spearman"
PEARSON = "pearson"

# permutation p-values are exact up to this many observations
EXACT_PERMUTATION_MAX_N = 8

_Z95 = 1.96


@dataclass(frozen=True)
class CorrelationResult:
    statistic: str
    value: float
    n: int
    p_value: float | None = None
    ci95: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "value": self.value,
            "n": self.n,
            "p": self.p_value,
            "ci_low": None if self.ci95 is None else self.ci95[0],
            "ci_high": None if self.ci95 is None else self.ci95[1],
        }


def _as_pair(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} != {b.size}")
    if a.size < 3:
        raise ValueError(f"need at least 3 observations, got {a.size}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("inputs must be finite")
    return a, b


def rankdata(x: Sequence[float]) -> np.ndarray:
    """1-based ranks, tied values sharing the average of their positions."""
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    n = a.size
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    order = np.argsort(a, kind="mergesort")
    s = a[order]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    np.not_equal(s[1:], s[:-1], out=new_group[1:])
    group = np.cumsum(new_group) - 1
    bounds = np.append(np.flatnonzero(new_group), n)
    # positions bounds[g] .. bounds[g+1]-1 share rank mean(bounds[g]+1 .. bounds[g+1])
    avg = 0.5 * (bounds[:-1] + bounds[1:] + 1)
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = avg[group]
    return ranks


def _centered_r(a: np.ndarray, b: np.ndarray) -> float | None:
    # two passes: means first, then products of deviations
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.dot(da, da))
    sbb = float(np.dot(db, db))
    if saa <= 0.0 or sbb <= 0.0:
        return None
    r = float(np.dot(da, db)) / math.sqrt(saa * sbb)
    return max(-1.0, min(1.0, r))


def _t_pvalue(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    df = n - 2
    t = r * math.sqrt(df / (1.0 - r * r))
    return float(min(1.0, 2.0 * _st.t.sf(abs(t), df)))


@lru_cache(maxsize=None)
def _all_permutations(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp)


def permutation_pvalue(rx: np.ndarray, ry: np.ndarray) -> float:
    """Two-sided p-value of the rank correlation over all n! reorderings of ``ry``."""
    n = rx.size
    perms = _all_permutations(n)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    observed = abs(float(np.dot(dx, dy))) / denom
    null = np.abs(dy[perms] @ dx) / denom
    hits = int(np.count_nonzero(null >= observed - 1e-9))
    return hits / perms.shape[0]


def spearman(x: Sequence[float], y: Sequence[float]) -> CorrelationResult | None:
    a, b = _as_pair(x, y)
    rx, ry = rankdata(a), rankdata(b)
    rho = _centered_r(rx, ry)
    if rho is None:
        return None
    n = a.size
    if n <= EXACT_PERMUTATION_MAX_N:
        p = permutation_pvalue(rx, ry)
    else:
        p = _t_pvalue(rho, n)
    return CorrelationResult(SPEARMAN, rho, n, p)


def fisher_ci(r: float, n: int, z: float = _Z95) -> tuple[float, float] | None:
    if n <= 3:
        return None
    if abs(r) >= 1.0:
        return (r, r)
    center = math.atanh(r)
    half = z / math.sqrt(n - 3)
    return (math.tanh(center - half), math.tanh(center + half))


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult | None:
    a, b = _as_pair(x, y)
    r = _centered_r(a, b)
    if r is None:
        return None
    n = a.size
    return CorrelationResult(PEARSON, r, n, _t_pvalue(r, n), fisher_ci(r, n))
