"""Deterministic k-fold assignments."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: np.ndarray  # fold index per sample
    seed: int

    def fold_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == fold)

    def iter_folds(self):
        """Yield (train_idx, test_idx) for each fold in order."""
        for fold in range(self.k):
            test = self.fold_indices(fold)
            train = np.flatnonzero(self.assignment != fold)
            yield train, test


def kfold_split(n: int, k: int, seed: int = 0) -> FoldAssignment:
    """Random partition of ``n`` samples into ``k`` folds of near-equal size.

    Fold sizes differ by at most one; the same (n, k, seed) always yields
    the same assignment.
    """
    if k < 2 or k > n:
        raise KTooLarge(f"need 2 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    start = 0
    for fold, size in enumerate(sizes):
        assignment[perm[start:start + size]] = fold
        start += size
    return FoldAssignment(k=k, assignment=assignment, seed=seed)
