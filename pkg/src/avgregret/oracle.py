"""Exhaustive optimum and from-scratch re-evaluation, used as ground truth."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import Population, PreconditionError, make_solution

DEFAULT_LIMIT = 2_000_000
OPT_TOL = 1e-12
_BATCH_CELLS = 2_000_000


@dataclass(frozen=True)
class OracleResult:
    best_subsets: tuple[tuple[int, ...], ...]
    optimal_arr: float
    evaluations: int

    @property
    def solution(self) -> tuple[int, ...]:
        return self.best_subsets[0]

    @property
    def arr(self) -> float:
        return self.optimal_arr


def brute_force_optimal(pop: Population, k: int, limit: int = DEFAULT_LIMIT) -> OracleResult:
    """Enumerate every k-subset in lexicographic order and keep the minimisers.

    Subsets are screened in vectorised batches; everything within 1e-9 of the
    screened minimum is then re-evaluated with ``pop.arr`` so the reported
    value and tie set come from the same evaluator the engines use.
    """
    n = pop.dataset.n
    if not 1 <= k <= n:
        raise PreconditionError(f"k must lie in [1, {n}], got {k}")
    total = math.comb(n, k)
    if total > limit:
        raise PreconditionError(f"C({n}, {k}) = {total} subsets exceeds the limit {limit}")

    U = pop.utilities()
    w = pop.weights / pop.total_weight
    top = pop.best_value[:, None]
    batch = max(1, _BATCH_CELLS // max(1, pop.m * k))
    combos = itertools.combinations(range(n), k)
    screened = np.empty(total)
    pos = 0
    while pos < total:
        chunk = np.array(list(itertools.islice(combos, batch)), dtype=np.intp).reshape(-1, k)
        sat = U[:, chunk].max(axis=2)
        screened[pos : pos + len(chunk)] = w @ ((top - sat) / top)
        pos += len(chunk)

    near = np.flatnonzero(screened <= screened.min() + 1e-9)
    exact = {}
    for idx in near.tolist():
        S = _nth_combination(n, k, idx)
        exact[S] = pop.arr(S)
    best = min(exact.values())
    winners = tuple(S for S in sorted(exact) if exact[S] <= best + OPT_TOL)
    return OracleResult(winners, best, total)


def _nth_combination(n: int, k: int, index: int) -> tuple[int, ...]:
    """The index-th k-subset of range(n) in lexicographic order."""
    out, start = [], 0
    for slot in range(k):
        for c in range(start, n):
            block = math.comb(n - c - 1, k - slot - 1)
            if index < block:
                out.append(c)
                start = c + 1
                break
            index -= block
    return tuple(out)


def recheck(result, evaluator=None) -> float:
    """Recompute arr of a returned solution from scratch, with no caches.

    ``result`` may be an engine report (anything with ``.solution``) or a
    plain id collection.  ``evaluator`` is a :class:`Population`, or any
    callable mapping a solution to its arr (e.g. the 2D integral evaluator).
    When omitted, the result's own evaluator is used if it carries one.
    """
    S = result.solution if hasattr(result, "solution") else result
    if evaluator is None:
        evaluator = getattr(result, "evaluator", None)
        if evaluator is None:
            raise ValueError("no evaluator given")
    if isinstance(evaluator, Population):
        return evaluator.arr(make_solution(S, evaluator.dataset.n))
    return evaluator(tuple(S))
