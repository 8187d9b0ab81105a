"""Greedy shrinking of the full dataset down to k points.

Starting from S = D the engine repeatedly drops the point whose removal
raises the average regret ratio the least.  Two accelerations are built in:

* a best-point cache: each utility function remembers its best point in the
  current S, and each point the functions it serves.  Evaluating the removal
  of p only rescans the functions served by p.
* lazy evaluation: removal values ``v_p = arr(S - {p})`` only grow as S
  shrinks, so a value computed against an earlier S is a lower bound.  A
  sorted list of (possibly stale) values is kept, and the head is refreshed
  until a freshly computed value sits at the top.

Ties between removal candidates (values within ``TIE_TOL``) go to the lowest
point id, in both the lazy and the eager path, so both produce the same trace.
"""

from __future__ import annotations

import bisect
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import Population, PreconditionError

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
LOWER_BOUND_SLACK = 1e-12
DEBUG_MAX_N = 64


class LowerBoundViolation(AssertionError):
    """A refreshed removal value fell below its stale value."""


@dataclass
class GreedyReport:
    solution: tuple[int, ...]
    arr: float
    trace: list[tuple[int, float]]
    rescanned_fraction: list[float]
    reevaluated_fraction: list[float]
    lazy: bool
    evaluations: int = 0
    steepness: float | None = None
    bound: float | None = None
    elapsed: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def removed(self) -> list[int]:
        return [p for p, _ in self.trace]


class BestPointCache:
    """Best point in the current S for every utility function of a population."""

    def __init__(self, pop: Population):
        self.pop = pop
        self.best_id = np.array(pop.best_id, dtype=np.intp)
        self.best_value = np.array(pop.best_value)
        self.loss = self._loss(np.arange(pop.m), self.best_value)
        self.owners: list[list[int]] = [[] for _ in range(pop.dataset.n)]
        for i, p in enumerate(self.best_id.tolist()):
            self.owners[p].append(i)
        self.active = np.arange(pop.dataset.n, dtype=np.intp)
        self.total_loss = math.fsum(self.loss.tolist())

    def _loss(self, rows, values):
        rr = (self.pop.best_value[rows] - values) / self.pop.best_value[rows]
        return rr if self.pop.uniform else rr * self.pop.weights[rows]

    @property
    def arr(self) -> float:
        return self.total_loss / self.pop.total_weight

    def rescan_without(self, p: int):
        """New best point (and value) in S - {p} for every function served by p."""
        rows = np.asarray(self.owners[p], dtype=np.intp)
        U = self.pop.utilities(rows, self.active)
        U[:, int(np.searchsorted(self.active, p))] = -np.inf
        j = np.argmax(U, axis=1)
        return rows, self.active[j], U[np.arange(len(rows)), j]

    def removal_value(self, p: int) -> float:
        """arr(S - {p}) using cached satisfactions for everyone not served by p."""
        if not self.owners[p]:
            return self.arr
        rows, _, vals = self.rescan_without(p)
        new = self._loss(rows, vals)
        terms = [self.total_loss] + (-self.loss[rows]).tolist() + new.tolist()
        return math.fsum(terms) / self.pop.total_weight

    def remove(self, p: int) -> int:
        """Commit the removal of p; returns how many functions were reassigned."""
        orphans = len(self.owners[p])
        if orphans:
            rows, ids, vals = self.rescan_without(p)
            self.best_id[rows] = ids
            self.best_value[rows] = vals
            self.loss[rows] = self._loss(rows, vals)
            for r, q in zip(rows.tolist(), ids.tolist()):
                self.owners[q].append(r)
            self.owners[p] = []
            self.total_loss = math.fsum(self.loss.tolist())
        self.active = np.delete(self.active, np.searchsorted(self.active, p))
        return orphans

    def check(self) -> None:
        """Compare every cached best point with a from-scratch scan."""
        vals, ids = self.pop.best_in(self.active.tolist())
        if not (np.array_equal(vals, self.best_value) and np.array_equal(ids, self.best_id)):
            raise AssertionError("best-point cache disagrees with a full rescan")
        for p in range(self.pop.dataset.n):
            for r in self.owners[p]:
                if self.best_id[r] != p:
                    raise AssertionError("owner lists out of sync with cached best points")
        if sum(len(o) for o in self.owners) != self.pop.m:
            raise AssertionError("every function must be served by exactly one point")


def _evaluate_many(cache: BestPointCache, ids, threads: int | None) -> list[float]:
    if threads and threads > 1 and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(cache.removal_value, ids))
    return [cache.removal_value(p) for p in ids]


def _eager_choice(values: list[float], ids: list[int]) -> tuple[int, float]:
    vmin = min(values)
    best = min(p for p, v in zip(ids, values) if v <= vmin + TIE_TOL)
    return best, vmin


class LazyList:
    """Points of S sorted ascending by (removal value, id), with freshness stamps."""

    def __init__(self, values: list[float], ids: list[int], stamp: int):
        self.entries = sorted(zip(values, ids))
        self.stamp = {p: stamp for p in ids}
        self.value = dict(zip(ids, values))

    def __len__(self):
        return len(self.entries)

    def refresh(self, p: int, new: float, stamp: int) -> None:
        old = self.value[p]
        if new < old - LOWER_BOUND_SLACK:
            raise LowerBoundViolation(f"point {p}: refreshed value {new!r} < stale value {old!r}")
        del self.entries[bisect.bisect_left(self.entries, (old, p))]
        bisect.insort(self.entries, (new, p))
        self.value[p] = new
        self.stamp[p] = stamp

    def discard(self, p: int) -> None:
        del self.entries[bisect.bisect_left(self.entries, (self.value[p], p))]
        del self.value[p]
        del self.stamp[p]

    def window(self, lo: float, hi: float) -> list[tuple[float, int]]:
        """Entries with lo < value <= hi."""
        a = bisect.bisect_right(self.entries, (lo, math.inf))
        b = bisect.bisect_right(self.entries, (hi, math.inf))
        return self.entries[a:b]


def _lazy_choice(L: LazyList, cache: BestPointCache, it: int) -> tuple[int, float, int]:
    refreshed = 0
    while True:
        v, p = L.entries[0]
        if L.stamp[p] == it:
            break
        L.refresh(p, cache.removal_value(p), it)
        refreshed += 1
    v_head, best = L.entries[0]
    # a stale entry just above the head may still tie it with a lower id
    for v_old, q in L.window(v_head, v_head + TIE_TOL):
        if q < best and L.stamp[q] != it:
            L.refresh(q, cache.removal_value(q), it)
            refreshed += 1
    for v_q, q in L.window(v_head, v_head + TIE_TOL):
        if q < best and L.stamp[q] == it:
            best = q
    return best, v_head, refreshed


def greedy_shrink(
    pop: Population,
    k: int,
    lazy: bool = True,
    debug: bool = False,
    threads: int | None = None,
) -> GreedyReport:
    """Shrink the dataset behind ``pop`` to ``k`` points.

    ``debug`` cross-checks every lazy choice against a full evaluation and
    re-validates the best-point cache after each removal; it is only
    honoured for datasets of at most 64 points.
    """
    n = pop.dataset.n
    if not 1 <= int(k) <= n:
        raise PreconditionError(f"k must lie in [1, {n}], got {k}")
    k = int(k)
    t0 = time.perf_counter()
    debug = debug and n <= DEBUG_MAX_N
    cache = BestPointCache(pop)
    trace, rescanned, reevaluated = [], [], []
    evaluations = 0
    L = None

    for it in range(n - k):
        ids = cache.active.tolist()
        if not lazy or L is None:
            values = _evaluate_many(cache, ids, threads)
            evaluations += len(ids)
            p, v = _eager_choice(values, ids)
            reevaluated.append(1.0)
            if lazy:
                L = LazyList(values, ids, it)
        else:
            p, v, refreshed = _lazy_choice(L, cache, it)
            evaluations += refreshed
            reevaluated.append(refreshed / len(ids))
            if debug:
                q, w = _eager_choice(_evaluate_many(cache, ids, None), ids)
                if (q, w) != (p, v):
                    raise AssertionError(f"lazy picked {p} ({v!r}), eager picks {q} ({w!r})")
        if L is not None:
            L.discard(p)
        orphans = cache.remove(p)
        rescanned.append(orphans / pop.m)
        trace.append((p, cache.arr))
        if debug:
            cache.check()
        logger.debug("iteration %d: removed %d, arr=%.6g, refreshed %.3f", it, p, cache.arr, reevaluated[-1])

    return GreedyReport(
        solution=tuple(cache.active.tolist()),
        arr=cache.arr,
        trace=trace,
        rescanned_fraction=rescanned,
        reevaluated_fraction=reevaluated,
        lazy=lazy,
        evaluations=evaluations,
        elapsed=time.perf_counter() - t0,
    )


def approximation_bound(s: float) -> float:
    """(e^t - 1)/t with t = s/(1 - s); 1 in the s -> 0 limit, inf at s = 1."""
    if s <= 0:
        return 1.0
    if s >= 1:
        return math.inf
    t = s / (1.0 - s)
    if t > 700:
        return math.inf
    return math.expm1(t) / t


def steepness(pop: Population) -> tuple[float, float]:
    """Steepness of arr over the dataset behind ``pop`` and the matching bound."""
    n = pop.dataset.n
    everything = list(range(n))
    base = pop.arr(everything)
    s = 0.0
    for p in range(n):
        alone = 1.0 - pop.arr([p])  # arr(empty set) is 1
        if alone <= 0:
            continue
        last = pop.arr([q for q in everything if q != p]) - base
        s = max(s, (alone - last) / alone)
    s = min(max(s, 0.0), 1.0)
    return s, approximation_bound(s)


def verify_lazy_equivalence(pop: Population, k: int, seed: int | None = None) -> bool:
    """Run lazy and eager shrinking on the same input; True iff traces match exactly.

    ``seed`` is accepted for harness symmetry; the engine itself is deterministic.
    """
    a = greedy_shrink(pop, k, lazy=True)
    b = greedy_shrink(pop, k, lazy=False)
    return a.solution == b.solution and a.trace == b.trace
