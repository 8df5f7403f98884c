"""Significance testing for paired per-case losses.

Two-tailed paired permutation tests (random sign flips of per-case loss
differences; exact enumeration for small n) with Benjamini-Hochberg
false-discovery-rate correction across a family of comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

EXACT_ENUMERATION_MAX_N = 20
_CHUNK = 1024


@dataclass(frozen=True)
class PairedLosses:
    """Per-case losses of two systems, aligned by case id."""

    case_ids: tuple[str, ...]
    losses_a: np.ndarray
    losses_b: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.losses_a, dtype=np.float64)
        b = np.asarray(self.losses_b, dtype=np.float64)
        if a.ndim != 1 or a.shape != b.shape or len(self.case_ids) != a.shape[0]:
            raise ValueError("losses must be aligned 1-d vectors matching case_ids")
        if a.shape[0] < 1:
            raise ValueError("need at least one pair")
        object.__setattr__(self, "losses_a", a)
        object.__setattr__(self, "losses_b", b)

    @property
    def differences(self) -> np.ndarray:
        return self.losses_a - self.losses_b


@dataclass(frozen=True)
class TestResult:
    comparison: str
    statistic: float
    p_value: float
    n_permutations: int
    seed: int
    method: str                    # "exact" | "monte-carlo"
    bh_rejected: bool | None = None


def _exact_p(diffs: np.ndarray, observed: float) -> tuple[float, int]:
    """Enumerate all 2^n sign assignments; two-tailed tail count includes ties."""
    n = len(diffs)
    total = 1 << n
    abs_obs = abs(observed)
    count = 0
    bit_cols = np.arange(n, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        signs = (((codes[:, None] >> bit_cols) & 1) * 2 - 1).astype(np.float64)
        stats = signs @ diffs / n
        count += int(np.count_nonzero(np.abs(stats) >= abs_obs))
    return count / total, total


def _monte_carlo_p(
    diffs: np.ndarray, observed: float, n_permutations: int, seed: int
) -> float:
    """Random sign flips with add-one smoothing; per-chunk seeding keeps the
    draw for index i independent of evaluation order."""
    n = len(diffs)
    abs_obs = abs(observed)
    count = 0
    done = 0
    chunk_idx = 0
    while done < n_permutations:
        take = min(_CHUNK, n_permutations - done)
        rng = np.random.default_rng([seed, chunk_idx])
        signs = rng.integers(0, 2, size=(take, n)).astype(np.float64) * 2 - 1
        stats = signs @ diffs / n
        count += int(np.count_nonzero(np.abs(stats) >= abs_obs))
        done += take
        chunk_idx += 1
    return (1 + count) / (n_permutations + 1)


def paired_permutation_test(
    pairs: PairedLosses,
    n_permutations: int = 10_000,
    seed: int = 0,
    comparison: str = "",
) -> TestResult:
    """Two-tailed paired permutation test on mean loss difference.

    Null distribution: independent random sign flips of the per-case
    differences. Exact enumeration of all 2^n assignments when n <= 20;
    otherwise Monte Carlo with add-one smoothing, so p >= 1/(n_perm + 1).
    """
    if n_permutations < 1:
        raise ValueError("n_permutations must be >= 1")
    diffs = pairs.differences
    observed = float(diffs.mean())
    if len(diffs) <= EXACT_ENUMERATION_MAX_N:
        p, total = _exact_p(diffs, observed)
        return TestResult(comparison, observed, p, total, seed, "exact")
    p = _monte_carlo_p(diffs, observed, n_permutations, seed)
    return TestResult(comparison, observed, p, n_permutations, seed, "monte-carlo")


def benjamini_hochberg(p_values: Sequence[float], q: float) -> np.ndarray:
    """Step-up FDR control: reject the k* smallest p-values where
    k* = max{i : p_(i) <= i*q/m}. Returns a boolean mask in input order."""
    if not 0 < q < 1:
        raise ValueError("q must be in (0, 1)")
    p = np.asarray(p_values, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError("p_values must be a vector")
    if p.size == 0:
        return np.zeros(0, dtype=bool)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    thresholds = q * np.arange(1, m + 1) / m
    passing = np.nonzero(p[order] <= thresholds)[0]
    mask = np.zeros(m, dtype=bool)
    if passing.size:
        k_star = passing[-1] + 1
        mask[order[:k_star]] = True
    return mask


def apply_bh_correction(results: Sequence[TestResult], q: float = 0.05) -> list[TestResult]:
    """Mark each result of one comparison family with its BH decision."""
    mask = benjamini_hochberg([r.p_value for r in results], q)
    return [replace(r, bh_rejected=bool(rej)) for r, rej in zip(results, mask)]
