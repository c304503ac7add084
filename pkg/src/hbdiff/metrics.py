"""Rank correlation between rankings with ties.

Every unordered pair of entities is classified against two rankings using
their tie groups:

    class            | meaning
    --------------------------------------------------------------
    concordant       | ordered the same way by both rankings
    discordant       | ordered oppositely
    tied both        | tied in both rankings
    tied one         | tied in exactly one ranking

From these counts, with `n0 = n (n - 1) / 2`:

    strict tau = (C - D) / n0
    large tau  = (C + T_both - D - T_one) / n0

The strict coefficient ignores tied pairs; the large one rewards rankings
that agree on their ties and penalizes ties only one of them sees.
"""

from __future__ import annotations

import logging
import math
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy import stats

from hbdiff.diffusion import Ranking
from hbdiff.exception import HbDiffException

LOG = logging.getLogger(__name__)

TauVariant = Literal['strict', 'large']


class RankingMismatchError(HbDiffException):
    """Raised when rankings compared together cover different entities."""
    exit_code = 3


class TauPairCounts(NamedTuple):
    concordant_strict: int
    discordant_strict: int
    tied_both: int
    tied_one: int
    total_pairs: int


def _tied_pairs(keys: np.ndarray) -> int:
    _, counts = np.unique(keys, return_counts=True)
    return int((counts * (counts - 1) // 2).sum())


def pair_counts(a: Ranking, b: Ranking) -> TauPairCounts:
    """Classify every unordered pair of entities against two rankings.

    Tie counts come from the tie groups directly; the concordant minus
    discordant balance is recovered exactly from scipy's tau-b, which
    runs in O(n log n).

    Raises:
        RankingMismatchError: if the rankings do not rank the same number
            of entities.
    """
    if len(a) != len(b):
        raise RankingMismatchError(
            f'cannot compare a ranking of {len(a)} entities with one of'
            f' {len(b)}'
        )
    n = len(a)
    total = n * (n - 1) // 2
    ga = a.groups.astype(np.int64)
    gb = b.groups.astype(np.int64)
    tied_a = _tied_pairs(ga)
    tied_b = _tied_pairs(gb)
    tied_both = _tied_pairs(ga * (int(gb.max(initial=0)) + 1) + gb)
    untied = total - tied_a - tied_b + tied_both
    balance = 0
    if untied:
        tau_b = stats.kendalltau(ga, gb)[0]
        balance = int(round(
            tau_b * math.sqrt(total - tied_a) * math.sqrt(total - tied_b)
        ))
    return TauPairCounts(
        concordant_strict=(untied + balance) // 2,
        discordant_strict=(untied - balance) // 2,
        tied_both=tied_both,
        tied_one=tied_a + tied_b - 2 * tied_both,
        total_pairs=total
    )


def tau_strict(counts: TauPairCounts) -> float:
    if counts.total_pairs < 1:
        raise ValueError('tau needs at least two entities')
    return (counts.concordant_strict - counts.discordant_strict) \
        / counts.total_pairs


def tau_large(counts: TauPairCounts) -> float:
    if counts.total_pairs < 1:
        raise ValueError('tau needs at least two entities')
    return (counts.concordant_strict + counts.tied_both
            - counts.discordant_strict - counts.tied_one) \
        / counts.total_pairs


TAU = {'strict': tau_strict, 'large': tau_large}


def tau(a: Ranking, b: Ranking, variant: TauVariant = 'strict') -> float:
    return TAU[variant](pair_counts(a, b))


def jaccard_head(a: Ranking, b: Ranking, k: int) -> float:
    """Jaccard index of the heads of two rankings.

    Each head holds the first `k` entities plus the rest of any tie group
    straddling position `k`.
    """
    if len(a) != len(b):
        raise RankingMismatchError(
            f'cannot compare a ranking of {len(a)} entities with one of'
            f' {len(b)}'
        )
    if k < 1:
        raise ValueError(f'head size must be >= 1, got {k}')
    head_a = set(a.top(k).tolist())
    head_b = set(b.top(k).tolist())
    return len(head_a & head_b) / len(head_a | head_b)


def correlation_matrix(rankings: Sequence[Ranking],
                       variant: TauVariant = 'strict') -> np.ndarray:
    """Symmetric matrix of pairwise taus with a unit diagonal."""
    size = len(rankings)
    matrix = np.eye(size)
    for i in range(size):
        for j in range(i + 1, size):
            matrix[i, j] = matrix[j, i] = tau(rankings[i], rankings[j],
                                              variant)
    return matrix


def jaccard_matrix(rankings: Sequence[Ranking], k: int) -> np.ndarray:
    size = len(rankings)
    matrix = np.eye(size)
    for i in range(size):
        for j in range(i + 1, size):
            matrix[i, j] = matrix[j, i] = jaccard_head(rankings[i],
                                                       rankings[j], k)
    return matrix


def mean_matrix(matrices: Sequence[np.ndarray]) -> np.ndarray:
    """Entrywise arithmetic mean, summed in the given order."""
    if not matrices:
        raise ValueError('no matrices to aggregate')
    total = np.zeros_like(matrices[0], dtype=np.float64)
    for matrix in matrices:
        total += matrix
    return total / len(matrices)


def correlation_matrices(rankings: Sequence[Ranking]
                         ) -> dict[str, np.ndarray]:
    """Strict and large matrices together, counting each pair once."""
    size = len(rankings)
    matrices: dict[str, np.ndarray] = {
        'strict': np.eye(size), 'large': np.eye(size)
    }
    for i in range(size):
        for j in range(i + 1, size):
            counts = pair_counts(rankings[i], rankings[j])
            for variant, matrix in matrices.items():
                matrix[i, j] = matrix[j, i] = TAU[variant](counts)
    return matrices
