"""Utility distributions, the Chernoff sample size, and seeded sampling.

Random numbers come from numpy's ``PCG64`` bit generator wrapped in a
``numpy.random.Generator``.  The state-advance rule per draw kind is fixed
and recorded in every report (see :data:`RNG_INFO`):

* discrete: one ``random()`` double per draw, inverted through the
  cumulative probability table;
* uniform box: one ``random((N, d))`` call, row-major;
* Gaussian mixture: batches of ``B = max(N - accepted, 1024)``; each batch
  consumes ``B`` doubles (component choice) then ``B*d`` standard normals;
  rows with a negative or all-zero weight vector are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import (
    Dataset,
    LinearUtility,
    Population,
    UtilityFunction,
    ValidationError,
)

RNG_INFO = {
    "bit_generator": "numpy.random.PCG64",
    "numpy_version": np.__version__,
    "discrete": "1 uniform double per draw, cumulative inversion (side=right)",
    "uniform_box": "random((N, d)) row-major",
    "gmm": "batch B=max(remaining,1024): B uniforms for component, then B*d standard normals; reject rows with any w<0 or all w==0",
}

PROB_TOL = 1e-9


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class SamplingParams:
    epsilon: float
    sigma: float

    def __post_init__(self):
        for name in ("epsilon", "sigma"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0 < v <= 1):
                raise ValidationError(f"{name} must lie in (0, 1], got {v!r}")


def sample_size(params: SamplingParams) -> int:
    """Smallest N with N >= 3 ln(1/sigma) / epsilon^2.

    Values within 1e-9 (relative) of an integer are snapped to it before the
    ceiling so that exact cases such as sigma = 1/e, epsilon = 1 give 3.
    """
    raw = 3.0 * math.log(1.0 / params.sigma) / params.epsilon ** 2
    near = round(raw)
    if abs(raw - near) <= 1e-9 * max(1.0, raw):
        raw = float(near)
    return max(1, math.ceil(raw))


def _atom_kind(f: UtilityFunction) -> str:
    return "linear" if isinstance(f, LinearUtility) else "tabular"


def _atom_row(f: UtilityFunction) -> np.ndarray:
    return f.weights if isinstance(f, LinearUtility) else f.utilities


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Finite set of utility functions with probabilities summing to 1."""

    atoms: tuple[UtilityFunction, ...]
    probabilities: tuple[float, ...]
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        atoms = tuple(self.atoms)
        probs = tuple(float(p) for p in self.probabilities)
        if not atoms or len(atoms) != len(probs):
            raise ValidationError("need at least one atom and one probability per atom")
        if any(not (0 < p <= 1) or not math.isfinite(p) for p in probs):
            raise ValidationError("probabilities must lie in (0, 1]")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        kinds = {_atom_kind(a) for a in atoms}
        if len(kinds) != 1:
            raise ValidationError("all atoms must be of the same kind (linear or tabular)")
        widths = {_atom_row(a).size for a in atoms}
        if len(widths) != 1:
            raise ValidationError("all atoms must have the same width")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probabilities", probs)
        if self.names is not None:
            object.__setattr__(self, "names", tuple(self.names))

    @classmethod
    def uniform(cls, atoms: Sequence[UtilityFunction], names=None) -> "DiscreteDistribution":
        return cls(tuple(atoms), tuple([1.0 / len(atoms)] * len(atoms)), names)

    @property
    def kind(self) -> str:
        return _atom_kind(self.atoms[0])

    @property
    def entries(self) -> list[tuple[UtilityFunction, float]]:
        return list(zip(self.atoms, self.probabilities))

    def matrix(self) -> np.ndarray:
        return np.vstack([_atom_row(a) for a in self.atoms])

    def population(self, D: Dataset) -> Population:
        """Exact evaluator: every atom weighted by its probability."""
        return Population(D, self.kind, self.matrix(), weights=self.probabilities)


@dataclass(frozen=True)
class UniformBox:
    """Linear utilities with weights i.i.d. uniform on [0, 1]^d."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("dimension must be >= 1")


@dataclass(frozen=True, eq=False)
class GMMComponent:
    weight: float
    mean: tuple[float, ...]
    std: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Mixture of axis-aligned Gaussians over weight space, truncated to w >= 0."""

    components: tuple[GMMComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValidationError("mixture needs at least one component")
        d = len(comps[0].mean)
        for c in comps:
            if len(c.mean) != d or len(c.std) != d or d < 1:
                raise ValidationError("component mean/std dimensions disagree")
            if not all(s > 0 and math.isfinite(s) for s in c.std):
                raise ValidationError("component standard deviations must be > 0")
            if not all(math.isfinite(m) for m in c.mean):
                raise ValidationError("component means must be finite")
            if not 0 < c.weight <= 1:
                raise ValidationError("mixing proportions must lie in (0, 1]")
        total = math.fsum(c.weight for c in comps)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"mixing proportions sum to {total!r}, not 1")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components[0].mean)

    @classmethod
    def from_dict(cls, spec: dict) -> "GaussianMixture":
        try:
            comps = tuple(
                GMMComponent(float(c["weight"]), tuple(map(float, c["mean"])), tuple(map(float, c["std"])))
                for c in spec["components"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed mixture spec: {exc}") from exc
        return cls(comps)

    def to_dict(self) -> dict:
        return {
            "components": [
                {"weight": c.weight, "mean": list(c.mean), "std": list(c.std)} for c in self.components
            ]
        }


ContinuousLinearSpec = Union[UniformBox, GaussianMixture]


class SampleSet(Population):
    """N utility functions drawn i.i.d., each counted once.

    ``atom_index`` is set when the draws come from a discrete distribution
    and records which atom each sample is.
    """

    def __init__(self, dataset: Dataset, kind: str, matrix, seed: int, atom_index=None):
        super().__init__(dataset, kind, matrix, weights=None)
        self.seed = int(seed)
        self.atom_index = None if atom_index is None else np.asarray(atom_index)

    @property
    def N(self) -> int:
        return self.m

    @property
    def functions(self) -> list[UtilityFunction]:
        return [self.function(i) for i in range(self.m)]

    @property
    def best_in_D(self) -> list[tuple[float, int]]:
        return list(zip(self.best_value.tolist(), self.best_id.tolist()))


def _draw_discrete(spec: DiscreteDistribution, N: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(np.asarray(spec.probabilities))
    cdf /= cdf[-1]
    u = rng.random(N)
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def _draw_gmm(spec: GaussianMixture, N: int, rng: np.random.Generator, max_batches: int = 10_000) -> np.ndarray:
    means = np.array([c.mean for c in spec.components])
    stds = np.array([c.std for c in spec.components])
    cdf = np.cumsum([c.weight for c in spec.components])
    cdf /= cdf[-1]
    out, have = [], 0
    for _ in range(max_batches):
        B = max(N - have, 1024)
        comp = np.minimum(np.searchsorted(cdf, rng.random(B), side="right"), len(cdf) - 1)
        W = means[comp] + stds[comp] * rng.standard_normal((B, spec.dim))
        ok = np.all(W >= 0, axis=1) & np.any(W > 0, axis=1)
        W = W[ok][: N - have]
        out.append(W)
        have += len(W)
        if have == N:
            return np.vstack(out)
    raise ValidationError("mixture puts too little mass on the nonnegative orthant to sample from")


def draw_samples(spec, N: int, seed: int, D: Dataset) -> SampleSet:
    if int(N) < 1:
        raise ValidationError("sample count must be >= 1")
    N = int(N)
    rng = make_rng(seed)
    if isinstance(spec, DiscreteDistribution):
        idx = _draw_discrete(spec, N, rng)
        return SampleSet(D, spec.kind, spec.matrix()[idx], seed, atom_index=idx)
    if isinstance(spec, UniformBox):
        if spec.dim != D.dim:
            raise ValidationError(f"distribution dimension {spec.dim} != dataset dimension {D.dim}")
        W = rng.random((N, spec.dim))
        zero = ~np.any(W > 0, axis=1)
        while np.any(zero):
            W[zero] = rng.random((int(zero.sum()), spec.dim))
            zero = ~np.any(W > 0, axis=1)
        return SampleSet(D, "linear", W, seed)
    if isinstance(spec, GaussianMixture):
        if spec.dim != D.dim:
            raise ValidationError(f"distribution dimension {spec.dim} != dataset dimension {D.dim}")
        return SampleSet(D, "linear", _draw_gmm(spec, N, rng), seed)
    raise ValidationError(f"unsupported distribution {type(spec).__name__}")


def empirical_bound_check(
    F_exact: DiscreteDistribution,
    S: Sequence[int],
    D: Dataset,
    params: SamplingParams,
    trials: int,
    seed: int,
) -> float:
    """Fraction of independent samplings whose estimate lands within epsilon of the exact value."""
    exact = F_exact.population(D).arr(S)
    N = sample_size(params)
    children = np.random.SeedSequence(int(seed)).spawn(int(trials))
    hits = 0
    for child in children:
        child_seed = int(child.generate_state(1, dtype=np.uint64)[0])
        est = draw_samples(F_exact, N, child_seed, D).arr(S)
        hits += abs(est - exact) < params.epsilon
    return hits / trials
