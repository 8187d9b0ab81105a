"""Points, utility functions and the regret-ratio calculus.

Everything here is pure: datasets, utilities and populations are immutable
after construction, and every metric is a deterministic function of its
inputs.  Linear utilities are always evaluated by accumulating
``w[0]*x[0] + w[1]*x[1] + ...`` left to right with plain IEEE multiply/add,
so a utility value is bit-identical whether it is computed for one point or
for a block of thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "ValidationError",
    "PreconditionError",
    "DegenerateUtilityError",
    "Point",
    "Dataset",
    "LinearUtility",
    "TabularUtility",
    "UtilityFunction",
    "Population",
    "make_solution",
    "utility_of",
    "satisfaction",
    "regret_ratio",
    "percentile_rank_index",
    "arr_exact_discrete",
    "arr_sampled",
    "vrr_sampled",
    "rr_stddev",
    "rr_percentiles",
]


class ValidationError(ValueError):
    """Malformed input: bad coordinates, weights, probabilities, files."""


class PreconditionError(ValueError):
    """An engine was called outside its domain (k out of range, d != 2, ...)."""


class DegenerateUtilityError(ValidationError):
    """A utility function has zero satisfaction over the whole dataset."""


@dataclass(frozen=True)
class Point:
    id: int
    coords: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.coords)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered, duplicate-free set of nonnegative points.

    ``labels`` carries the caller's identifiers (e.g. the ``id`` column of a
    CSV file); point ids are always positions ``0..n-1``.  ``source_rows``
    maps each point back to its row in the original input, which matters
    when duplicates were dropped by :meth:`from_rows`.
    """

    coords: np.ndarray
    labels: tuple[str, ...] | None = None
    source_rows: tuple[int, ...] | None = None
    dropped: tuple[int, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
            raise ValidationError("dataset needs at least one point of dimension >= 1")
        if not np.all(np.isfinite(c)):
            raise ValidationError("coordinates must be finite")
        if np.any(c < 0):
            raise ValidationError("coordinates must be nonnegative")
        if len(np.unique(c, axis=0)) != len(c):
            raise ValidationError("duplicate coordinate vectors; build with Dataset.from_rows")
        object.__setattr__(self, "coords", _readonly(c))
        n = c.shape[0]
        if self.labels is not None:
            if len(self.labels) != n:
                raise ValidationError("labels length must equal number of points")
            object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        rows = tuple(range(n)) if self.source_rows is None else tuple(int(r) for r in self.source_rows)
        if len(rows) != n:
            raise ValidationError("source_rows length must equal number of points")
        object.__setattr__(self, "source_rows", rows)

    @classmethod
    def from_rows(cls, rows, labels: Sequence[str] | None = None) -> "Dataset":
        """Build a dataset, dropping repeated coordinate vectors (first kept)."""
        c = np.asarray(rows, dtype=np.float64)
        if c.ndim == 1:
            c = c.reshape(-1, 1)
        seen: dict[bytes, int] = {}
        keep, dropped = [], []
        for r in range(c.shape[0]):
            key = np.ascontiguousarray(c[r] + 0.0).tobytes()  # +0.0 folds -0.0
            if key in seen:
                dropped.append(r)
            else:
                seen[key] = r
                keep.append(r)
        kept_labels = None if labels is None else [labels[r] for r in keep]
        return cls(c[keep], labels=kept_labels, source_rows=keep, dropped=tuple(dropped))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def point(self, i: int) -> Point:
        return Point(int(i), tuple(float(v) for v in self.coords[i]))

    @property
    def points(self) -> list[Point]:
        return [self.point(i) for i in range(self.n)]

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, eq=False)
class LinearUtility:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValidationError("linear weights must be finite and nonnegative")
        if not np.any(w > 0):
            raise ValidationError("linear weights must not all be zero")
        object.__setattr__(self, "weights", _readonly(w))

    def __eq__(self, other):
        return isinstance(other, LinearUtility) and np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(("linear", self.weights.tobytes()))


@dataclass(frozen=True, eq=False)
class TabularUtility:
    utilities: np.ndarray
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        u = np.asarray(self.utilities, dtype=np.float64).ravel()
        if u.size == 0 or not np.all(np.isfinite(u)) or np.any(u < 0) or np.any(u > 1):
            raise ValidationError("tabular utilities must lie in [0, 1]")
        object.__setattr__(self, "utilities", _readonly(u))

    def __eq__(self, other):
        return isinstance(other, TabularUtility) and np.array_equal(self.utilities, other.utilities)

    def __hash__(self):
        return hash(("tabular", self.utilities.tobytes()))


UtilityFunction = Union[LinearUtility, TabularUtility]


def utility_of(f: UtilityFunction, p: Point) -> float:
    if isinstance(f, LinearUtility):
        if len(p.coords) != f.weights.size:
            raise ValidationError(f"dimension mismatch: weights {f.weights.size}, point {len(p.coords)}")
        total = 0.0
        for w, x in zip(f.weights.tolist(), p.coords):
            total += w * x
        return total
    if not 0 <= p.id < f.utilities.size:
        raise ValidationError(f"point id {p.id} outside utility table of length {f.utilities.size}")
    return float(f.utilities[p.id])


def make_solution(ids: Iterable[int], n: int) -> tuple[int, ...]:
    """Validate ids against a dataset of size ``n``; return them sorted."""
    out = sorted(int(i) for i in ids)
    if len(set(out)) != len(out):
        raise ValidationError("solution contains duplicate ids")
    if out and (out[0] < 0 or out[-1] >= n):
        raise ValidationError(f"solution ids must lie in [0, {n - 1}]")
    return tuple(out)


def satisfaction(f: UtilityFunction, S: Iterable[int], D: Dataset) -> tuple[float, int | None]:
    best, best_id = 0.0, None
    for i in make_solution(S, D.n):
        u = utility_of(f, D.point(i))
        if best_id is None or u > best:
            best, best_id = u, i
    return best, best_id


def regret_ratio(f: UtilityFunction, S: Iterable[int], D: Dataset) -> float:
    top, _ = satisfaction(f, range(D.n), D)
    if top <= 0:
        raise DegenerateUtilityError("utility function is zero on every point of the dataset")
    got, _ = satisfaction(f, S, D)
    return (top - got) / top


def percentile_rank_index(q: float, count: int) -> int:
    """Nearest-rank index: ``ceil(q/100 * count) - 1`` clamped to the array."""
    if not 0 <= q <= 100:
        raise ValidationError(f"percentile {q} outside [0, 100]")
    return min(max(math.ceil(q / 100.0 * count) - 1, 0), count - 1)


class Population:
    """A finite, weighted collection of utility functions over one dataset.

    This is the common evaluator behind exact discrete averages (weights are
    the probabilities) and sampled averages (``weights=None``, every function
    counts once).  The best point in D of every function is found once, at
    construction, by a full linear scan.

    ``kind`` is ``"linear"`` with ``matrix`` of shape (m, d) or ``"tabular"``
    with ``matrix`` of shape (m, n).
    """

    _CHUNK_CELLS = 4_000_000

    def __init__(self, dataset: Dataset, kind: str, matrix, weights=None):
        if kind not in ("linear", "tabular"):
            raise ValidationError(f"unknown utility kind {kind!r}")
        M = np.asarray(matrix, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] < 1:
            raise ValidationError("population needs at least one utility function")
        if kind == "linear":
            if M.shape[1] != dataset.dim:
                raise ValidationError(f"dimension mismatch: weights {M.shape[1]}, dataset {dataset.dim}")
            if not np.all(np.isfinite(M)) or np.any(M < 0) or np.any(~np.any(M > 0, axis=1)):
                raise ValidationError("linear weights must be nonnegative, finite and not all zero")
        else:
            if M.shape[1] != dataset.n:
                raise ValidationError(f"utility table width {M.shape[1]} != dataset size {dataset.n}")
            if not np.all(np.isfinite(M)) or np.any(M < 0) or np.any(M > 1):
                raise ValidationError("tabular utilities must lie in [0, 1]")
        self.dataset = dataset
        self.kind = kind
        self.matrix = _readonly(M)
        self.m = M.shape[0]
        if weights is None:
            self.uniform = True
            self.weights = _readonly(np.ones(self.m))
            self.total_weight = float(self.m)
        else:
            w = np.asarray(weights, dtype=np.float64).ravel()
            if w.shape[0] != self.m or not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValidationError("weights must be one nonnegative value per function")
            self.uniform = False
            self.weights = _readonly(w)
            self.total_weight = math.fsum(w.tolist())
            if self.total_weight <= 0:
                raise ValidationError("weights must not all be zero")
        self.best_value, self.best_id = self._scan_best()
        if np.any(self.best_value <= 0):
            bad = int(np.flatnonzero(self.best_value <= 0)[0])
            raise DegenerateUtilityError(f"utility function {bad} is zero on every point")

    # -- utilities -------------------------------------------------------

    def utilities(self, rows=None, cols=None) -> np.ndarray:
        """Utility block ``U[rows, cols]`` (fresh, writable array)."""
        rows = np.arange(self.m) if rows is None else np.asarray(rows, dtype=np.intp)
        cols = np.arange(self.dataset.n) if cols is None else np.asarray(cols, dtype=np.intp)
        if self.kind == "tabular":
            return self.matrix[np.ix_(rows, cols)].copy()
        W = self.matrix[rows]
        X = self.dataset.coords[cols]
        out = W[:, 0:1] * X[:, 0][None, :]
        for j in range(1, W.shape[1]):
            out += W[:, j : j + 1] * X[:, j][None, :]
        return out

    def _row_chunks(self):
        step = max(1, self._CHUNK_CELLS // max(1, self.dataset.n))
        for lo in range(0, self.m, step):
            yield np.arange(lo, min(self.m, lo + step))

    def _scan_best(self):
        vals = np.empty(self.m)
        ids = np.empty(self.m, dtype=np.intp)
        for rows in self._row_chunks():
            U = self.utilities(rows)
            j = np.argmax(U, axis=1)  # first max -> lowest id
            ids[rows] = j
            vals[rows] = U[np.arange(len(rows)), j]
        vals.setflags(write=False)
        ids.setflags(write=False)
        return vals, ids

    # -- metrics ---------------------------------------------------------

    def best_in(self, S: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Per-function satisfaction over S and the (lowest-id) best point; -1 if S is empty."""
        S = np.asarray(make_solution(S, self.dataset.n), dtype=np.intp)
        if S.size == 0:
            return np.zeros(self.m), np.full(self.m, -1, dtype=np.intp)
        vals = np.empty(self.m)
        ids = np.empty(self.m, dtype=np.intp)
        step = max(1, self._CHUNK_CELLS // S.size)
        for lo in range(0, self.m, step):
            rows = np.arange(lo, min(self.m, lo + step))
            U = self.utilities(rows, S)
            j = np.argmax(U, axis=1)
            ids[rows] = S[j]
            vals[rows] = U[np.arange(len(rows)), j]
        return vals, ids

    def regret_ratios(self, S: Sequence[int]) -> np.ndarray:
        vals, _ = self.best_in(S)
        return (self.best_value - vals) / self.best_value

    def mean(self, values: np.ndarray) -> float:
        """Weighted mean with a correctly rounded (order-free) sum."""
        if self.uniform:
            return math.fsum(values.tolist()) / self.m
        return math.fsum((values * self.weights).tolist()) / self.total_weight

    def arr(self, S: Sequence[int]) -> float:
        return self.mean(self.regret_ratios(S))

    def vrr(self, S: Sequence[int]) -> float:
        rr = self.regret_ratios(S)
        mu = self.mean(rr)
        return self.mean((rr - mu) ** 2)

    def percentiles(self, S: Sequence[int], qs: Sequence[float]) -> list[float]:
        rr = self.regret_ratios(S)
        order = np.argsort(rr, kind="stable")
        srt = rr[order]
        if self.uniform:
            return [float(srt[percentile_rank_index(q, self.m)]) for q in qs]
        cum = np.cumsum(self.weights[order]) / self.total_weight
        out = []
        for q in qs:
            percentile_rank_index(q, self.m)  # range check
            idx = int(np.searchsorted(cum, q / 100.0 - 1e-12, side="left"))
            out.append(float(srt[min(idx, self.m - 1)]))
        return out

    def function(self, i: int) -> UtilityFunction:
        if self.kind == "linear":
            return LinearUtility(self.matrix[i])
        return TabularUtility(self.matrix[i])


def _bound_population(F, D: Dataset) -> Population:
    if isinstance(F, Population):
        if F.dataset is not D and not (
            F.dataset.coords.shape == D.coords.shape and np.array_equal(F.dataset.coords, D.coords)
        ):
            raise ValidationError("sample set was drawn over a different dataset")
        return F
    return F.population(D)


def arr_exact_discrete(F, S: Sequence[int], D: Dataset) -> float:
    """Probability-weighted average regret ratio over a finite distribution."""
    return _bound_population(F, D).arr(S)


def arr_sampled(F_N: Population, S: Sequence[int], D: Dataset) -> float:
    """Sample mean of regret ratios, using the cached best-in-D values."""
    return _bound_population(F_N, D).arr(S)


def vrr_sampled(F_N: Population, S: Sequence[int], D: Dataset) -> float:
    return _bound_population(F_N, D).vrr(S)


def rr_stddev(F_N: Population, S: Sequence[int], D: Dataset) -> float:
    return math.sqrt(vrr_sampled(F_N, S, D))


def rr_percentiles(F_N: Population, S: Sequence[int], D: Dataset, qs: Sequence[float]) -> list[float]:
    return _bound_population(F_N, D).percentiles(S, qs)
