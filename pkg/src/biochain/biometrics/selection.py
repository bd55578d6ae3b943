"""Sequential forward floating search (SFFS).

The search alternates a best single addition with conditional best single
removals; a removal is kept only when it strictly beats the best subset
recorded at the smaller size. Records are seeded with the plain forward
selection trajectory, so the result at every size is at least as good as
sequential forward selection. Ties go to the lowest feature index.
"""

from __future__ import annotations

import math
from typing import Callable, Hashable, Iterable, Sequence

from ..errors import CriterionFailure

Subset = tuple
Criterion = Callable[[Subset], float]


class _Memo:
    def __init__(self, criterion: Criterion):
        self.criterion = criterion
        self.cache: dict[frozenset, float] = {}

    def __call__(self, subset: Iterable) -> float:
        key = frozenset(subset)
        if key not in self.cache:
            value = self.criterion(tuple(sorted(key)))
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise CriterionFailure(f"criterion returned non-numeric {value!r}") from None
            if math.isnan(value):
                raise CriterionFailure(f"criterion returned NaN for subset {sorted(key)}")
            self.cache[key] = value
        return self.cache[key]

    @property
    def evaluations(self) -> int:
        return len(self.cache)


def _best_addition(current: list, pool: Sequence, quality: _Memo):
    best_f, best_q = None, -math.inf
    chosen = set(current)
    for f in pool:
        if f in chosen:
            continue
        q = quality(current + [f])
        if q > best_q:
            best_f, best_q = f, q
    return best_f, best_q


def _best_removal(current: list, quality: _Memo):
    best_f, best_q = None, -math.inf
    for f in sorted(current):
        q = quality([x for x in current if x != f])
        if q > best_q:
            best_f, best_q = f, q
    return best_f, best_q


def forward_selection(pool: Sequence[Hashable], criterion: Criterion, max_size: int) -> dict[int, tuple[Subset, float]]:
    """Plain sequential forward selection; ``{size: (subset, quality)}``."""
    quality = criterion if isinstance(criterion, _Memo) else _Memo(criterion)
    pool = sorted(pool)
    current: list = []
    out = {}
    for k in range(1, max_size + 1):
        f, q = _best_addition(current, pool, quality)
        current = current + [f]
        out[k] = (tuple(sorted(current)), q)
    return out


def sffs_select(pool: Sequence[Hashable], criterion: Criterion, target_sizes: Iterable[int],
                return_all: bool = False) -> dict[int, tuple[Subset, float]]:
    """Best subset found for each requested size, ``{size: (subset, quality)}``.

    ``criterion`` maps a sorted tuple of features to a quality (higher is
    better) and must be deterministic; values are cached per subset.
    """
    pool = sorted(pool)
    sizes = sorted(set(int(k) for k in target_sizes))
    if not sizes:
        return {}
    max_size = sizes[-1]
    if sizes[0] < 1 or max_size > len(pool):
        raise ValueError(f"target sizes must lie in [1, {len(pool)}]")
    quality = _Memo(criterion)

    records: dict[int, tuple[Subset, float]] = dict(forward_selection(pool, quality, max_size))

    current: list = []
    k = 0
    while True:
        f, q = _best_addition(current, pool, quality)
        current = current + [f]
        k += 1
        rec_set, rec_q = records[k]
        if q > rec_q:
            records[k] = (tuple(sorted(current)), q)
        elif list(rec_set) != sorted(current):
            current = list(rec_set)
        # conditional exclusion
        while k > 1:
            g, q_minus = _best_removal(current, quality)
            if q_minus > records[k - 1][1]:
                current = [x for x in current if x != g]
                k -= 1
                records[k] = (tuple(sorted(current)), q_minus)
            else:
                break
        if k == max_size:
            break

    if return_all:
        return records
    return {k: records[k] for k in sizes}
