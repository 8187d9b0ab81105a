"""Exact average-regret minimisation for 2D data under uniform linear utilities.

Weights (w1, w2) are uniform on the unit square.  A weight vector only
matters through its angle theta = atan(w2/w1), so utility space is an
interval [0, pi/2].  On the sorted skyline p_0..p_{m-1} (x descending, y
ascending) consecutive winners hand over at separating angles, and the
optimum is a chain p_i -> p_j -> ... found by memoised recursion over
(points left, current point, angle where it took over).

Region masses are integrals of ``1 - f(p)/f(q)`` over a wedge of the
unit square, where q is the best point of the whole dataset.  Substituting
t = tan(theta) (or cot(theta) above pi/4) gives the one-dimensional
``0.5 * integral (1 - (a + b t)/(A + B t)) dt`` which has the closed form
implemented in :func:`_rational_integral`.  ``method="quad"`` evaluates
the same masses with scipy's adaptive ``dblquad`` directly in (w1, w2).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .core import Dataset, PreconditionError, ValidationError, make_solution

HALF_PI = math.pi / 2
QUARTER_PI = math.pi / 4
ANGLE_TOL = 1e-12
TIE_TOL = 1e-12
QUAD_EPSABS = 1e-10
# area of the admissible weight region [0, 1]^2 under density 1
REGION_MEASURE = 1.0


@dataclass(frozen=True, eq=False)
class SkylineIndex:
    """Skyline of a 2D dataset: x strictly descending, y strictly ascending."""

    ids: tuple[int, ...]
    coords: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)


def _sweep(coords: np.ndarray) -> list[int]:
    # equal x: larger y first, so the dominated twin is swept out
    order = sorted(range(len(coords)), key=lambda i: (-coords[i, 0], -coords[i, 1], i))
    keep, top = [], -math.inf
    for i in order:
        if coords[i, 1] > top:
            keep.append(i)
            top = coords[i, 1]
    return keep


def skyline_2d(D: Dataset) -> SkylineIndex:
    if D.dim != 2:
        raise PreconditionError(f"skyline_2d needs 2-dimensional data, got d={D.dim}")
    keep = _sweep(D.coords)
    return SkylineIndex(tuple(keep), D.coords[keep].copy())


def _pair_angle(lo: np.ndarray, hi: np.ndarray) -> float:
    """Weight angle at which points ``lo`` (larger x) and ``hi`` (larger y) tie.

    w1*x_lo + w2*y_lo = w1*x_hi + w2*y_hi  <=>  w2/w1 = (x_lo - x_hi)/(y_hi - y_lo).
    Above this angle ``hi`` wins, below it ``lo`` wins.
    """
    dx = lo[0] - hi[0]
    dy = hi[1] - lo[1]
    if dx == 0 and dy == 0:
        raise ValidationError("identical points have no separating angle")
    return math.atan2(dx, dy)


class AngleTable:
    """Separating angles of a sorted skyline plus each point's winning range.

    ``theta[i, j]`` is symmetric; column ``m`` is the pi/2 sentinel.
    ``lower[i]``/``upper[i]`` bound the angles where p_i beats every other
    skyline point; the range is empty for points off the convex chain.
    """

    def __init__(self, coords: np.ndarray):
        c = np.asarray(coords, dtype=np.float64)
        m = len(c)
        self.m = m
        self.coords = c
        theta = np.full((m, m + 1), HALF_PI)
        for i in range(m):
            for j in range(i + 1, m):
                theta[i, j] = theta[j, i] = _pair_angle(c[i], c[j])
        self.theta = theta
        self.lower = np.array([max([0.0] + [theta[i, j] for j in range(i)]) for i in range(m)])
        self.upper = np.array([min([HALF_PI] + [theta[i, j] for j in range(i + 1, m)]) for i in range(m)])
        regions = [(self.lower[q], self.upper[q], q) for q in range(m) if self.lower[q] < self.upper[q]]
        regions.sort()
        self.regions = regions
        self._starts = [r[0] for r in regions]

    def overlapping(self, a: float, b: float):
        """Best-point regions meeting (a, b), clipped to it."""
        idx = max(0, bisect.bisect_right(self._starts, a) - 1)
        for lo, hi, q in self.regions[idx:]:
            if lo >= b:
                break
            tl, tu = max(lo, a), min(hi, b)
            if tl < tu:
                yield q, tl, tu


def separating_angle(i: int, j: int, sky: SkylineIndex) -> float:
    """theta(i, j) for skyline positions i != j; j == len(sky) is the pi/2 sentinel."""
    m = len(sky)
    if j == m or i == m:
        return HALF_PI
    if i == j or not (0 <= i < m and 0 <= j < m):
        raise ValidationError("separating_angle needs two distinct skyline positions")
    a, b = min(i, j), max(i, j)
    return _pair_angle(sky.coords[a], sky.coords[b])


# -- closed-form wedge integrals -------------------------------------------


def _phi(z: float) -> float:
    """(log1p(z) - z) / z**2, stable near 0."""
    if z < 1e-3:
        return -0.5 + z * (1 / 3 + z * (-0.25 + z * (0.2 + z * (-1 / 6 + z / 7))))
    return (math.log1p(z) - z) / (z * z)


def _rational_integral(a: float, b: float, A: float, B: float, t1: float, t2: float) -> float:
    """Integral of (a + b t) / (A + B t) for t in [t1, t2], A, B >= 0.

    Written as ``dt*h(t1) + (aB - bA) dt^2 / c^2 * phi(B dt / c)`` with
    c = A + B t1, which never divides by B.
    """
    dt = t2 - t1
    if dt <= 0:
        return 0.0
    c = A + B * t1
    if c <= 0:
        raise ValidationError("best point has zero utility inside its own region")
    return dt * ((a + b * t1) / c) + (a * B - b * A) * dt * dt / (c * c) * _phi(B * dt / c)


def _tan(theta: float) -> float:
    return 1.0 if theta == QUARTER_PI else math.tan(theta)


def _cot(theta: float) -> float:
    if theta == HALF_PI:
        return 0.0
    if theta == QUARTER_PI:
        return 1.0
    return math.cos(theta) / math.sin(theta)


def _wedge_closed(p: np.ndarray, q: np.ndarray, lo: float, hi: float) -> float:
    xp, yp = float(p[0]), float(p[1])
    xq, yq = float(q[0]), float(q[1])
    total = 0.0
    if lo < QUARTER_PI:
        t1, t2 = _tan(lo), _tan(min(hi, QUARTER_PI))
        total += 0.5 * ((t2 - t1) - _rational_integral(xp, yp, xq, yq, t1, t2))
    if hi > QUARTER_PI:
        s1, s2 = _cot(hi), _cot(max(lo, QUARTER_PI))
        total += 0.5 * ((s2 - s1) - _rational_integral(yp, xp, yq, xq, s1, s2))
    return total


def _wedge_quad(p: np.ndarray, q: np.ndarray, lo: float, hi: float) -> float:
    xp, yp = float(p[0]), float(p[1])
    xq, yq = float(q[0]), float(q[1])

    def g(w2, w1):
        den = w1 * xq + w2 * yq
        return 0.0 if den <= 0 else 1.0 - (w1 * xp + w2 * yp) / den

    cl = 0.0 if lo == 0 else math.tan(lo)
    cu = math.inf if hi >= HALF_PI else math.tan(hi)
    end = 1.0 if cl <= 1 else 1.0 / cl
    split = min(end, 1.0 / cu if cu > 1 else 1.0)
    total = 0.0
    if split > 0:
        total += integrate.dblquad(g, 0.0, split, lambda w1: cl * w1, lambda w1: cu * w1,
                                   epsabs=QUAD_EPSABS, epsrel=1e-10)[0]
    if end > split:
        # w2 <= 1 clips the wedge beyond w1 = 1/cu
        total += integrate.dblquad(g, split, end, lambda w1: cl * w1, lambda w1: 1.0,
                                   epsabs=QUAD_EPSABS, epsrel=1e-10)[0]
    return total


_WEDGE = {"closed": _wedge_closed, "quad": _wedge_quad}


def region_mass(p, table: AngleTable, theta_l: float, theta_u: float, method: str = "closed") -> float:
    """Unnormalised regret mass of the single point ``p`` over angles [theta_l, theta_u]."""
    if theta_l > theta_u:
        raise ValidationError(f"theta_l {theta_l} > theta_u {theta_u}")
    if method not in _WEDGE:
        raise ValidationError(f"unknown integration method {method!r}")
    wedge = _WEDGE[method]
    p = np.asarray(p, dtype=np.float64)
    return sum(wedge(p, table.coords[q], tl, tu) for q, tl, tu in table.overlapping(theta_l, theta_u))


def segment_arr(
    i: int,
    theta_l: float,
    theta_u: float,
    sky: SkylineIndex,
    D: Dataset | None = None,
    density: str = "uniform",
    method: str = "closed",
    table: AngleTable | None = None,
) -> float:
    """Unnormalised regret mass of skyline point i alone over [theta_l, theta_u].

    Dividing by :data:`REGION_MEASURE` gives its contribution to arr.
    """
    _check_density(density)
    if not 0 <= theta_l <= theta_u <= HALF_PI:
        raise ValidationError(f"need 0 <= theta_l <= theta_u <= pi/2, got [{theta_l}, {theta_u}]")
    table = table or AngleTable(sky.coords)
    return region_mass(sky.coords[i], table, theta_l, theta_u, method)


def _check_density(density: str) -> None:
    if density != "uniform":
        raise PreconditionError("the exact 2D program supports only the uniform density on [0,1]^2")


def arr_uniform(S: Sequence[int], D: Dataset, method: str = "closed", table: AngleTable | None = None) -> float:
    """Exact arr of any subset of a 2D dataset under uniform linear utilities."""
    if D.dim != 2:
        raise PreconditionError("arr_uniform needs 2-dimensional data")
    S = make_solution(S, D.n)
    if not S:
        return 1.0
    table = table or AngleTable(skyline_2d(D).coords)
    sub = D.coords[list(S)]
    own = AngleTable(sub[_sweep(sub)])
    mass = math.fsum(
        region_mass(own.coords[a], table, own.lower[a], own.upper[a], method)
        for a in range(own.m)
        if own.lower[a] < own.upper[a]
    )
    return mass / REGION_MEASURE


class SegmentArrCache:
    """Memo of single-point masses keyed by skyline indices, never by angles.

    ``cell(i, z, j)`` is the mass of p_i between theta(z, i) (0 when z == -1)
    and theta(i, j) (pi/2 when j == m).
    """

    def __init__(self, sky: SkylineIndex, method: str = "closed"):
        self.sky = sky
        self.table = AngleTable(sky.coords)
        self.method = method
        self.m = len(sky)
        self._memo: dict[tuple[int, int, int], float] = {}

    def lower_angle(self, i: int, z: int) -> float:
        return 0.0 if z < 0 else float(self.table.theta[z, i])

    def cell(self, i: int, z: int, j: int) -> float:
        key = (i, z, j)
        hit = self._memo.get(key)
        if hit is None:
            lo = self.lower_angle(i, z)
            hi = max(lo, float(self.table.theta[i, j]))
            hit = region_mass(self.sky.coords[i], self.table, lo, hi, self.method)
            self._memo[key] = hit
        return hit

    def __len__(self) -> int:
        return len(self._memo)


@dataclass
class DPResult:
    solution: tuple[int, ...]
    arr: float
    skyline: tuple[int, ...]
    chain: tuple[int, ...] = ()
    truncated: bool = False
    cells: int = 0
    evaluator: Callable[[Sequence[int]], float] | None = field(default=None, repr=False)


def dp_solve(D: Dataset, k: int, density: str = "uniform", method: str = "closed") -> DPResult:
    """Optimal subset of at most k points for uniform linear utilities in 2D.

    If k is at least the skyline size the skyline itself is returned
    (``truncated`` marks k strictly larger than the skyline).
    """
    _check_density(density)
    if D.dim != 2:
        raise PreconditionError(f"dp_solve needs 2-dimensional data, got d={D.dim}")
    if int(k) < 1:
        raise PreconditionError(f"k must be >= 1, got {k}")
    k = int(k)
    sky = skyline_2d(D)
    m = len(sky)
    cache = SegmentArrCache(sky, method)

    def evaluator(S):
        return arr_uniform(S, D, method, cache.table)

    if k >= m:
        sol = tuple(sorted(sky.ids))
        return DPResult(sol, evaluator(sol), sky.ids, tuple(range(m)), k > m, 0, evaluator)

    theta = cache.table.theta
    # layer[(i, z)] = (best value, chosen j) with r points still allowed after p_i
    layer: dict[tuple[int, int], tuple[float, int]] = {}
    layers = []
    for r in range(k):
        cur = {}
        for i in range(m):
            for z in [-1] + list(range(i)):
                tl = cache.lower_angle(i, z)
                best = (cache.cell(i, z, m), m)
                if r > 0:
                    for j in range(i + 1, m):
                        if theta[i, j] < tl - ANGLE_TOL:
                            continue
                        val = cache.cell(i, z, j) + layer[(j, i)][0]
                        if val < best[0]:
                            best = (val, j)
                cur[(i, z)] = best
        layers.append(cur)
        layer = cur

    top = layers[-1]
    vmin = min(top[(i, -1)][0] for i in range(m))
    candidates = []
    for i in range(m):
        if top[(i, -1)][0] <= vmin + TIE_TOL:
            chain = _unwind(layers, i, m)
            candidates.append((tuple(sorted(sky.ids[c] for c in chain)), chain, top[(i, -1)][0]))
    sol, chain, value = min(candidates)
    return DPResult(sol, value / REGION_MEASURE, sky.ids, chain, False, len(cache), evaluator)


def _unwind(layers, i: int, m: int) -> tuple[int, ...]:
    chain, z = [i], -1
    for r in range(len(layers) - 1, -1, -1):
        j = layers[r][(i, z)][1]
        if j == m:
            break
        chain.append(j)
        i, z = j, i
    return tuple(chain)
