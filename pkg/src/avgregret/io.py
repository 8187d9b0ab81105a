"""CSV ingestion, synthetic data and JSON run reports."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset, TabularUtility, ValidationError
from .distributions import DiscreteDistribution, GaussianMixture, make_rng

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SYNTHETIC_KINDS = ("uniform", "correlated", "anticorrelated")
JITTER = 0.05


def _rows(path):
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [(lineno, row) for lineno, row in enumerate(csv.reader(fh), start=1) if row]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: empty file")
    return rows


def _number(text: str, path, lineno: int, what: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: {what} {text!r} is not a number") from None
    if not math.isfinite(v):
        raise ValidationError(f"{path}:{lineno}: {what} {text!r} is not finite")
    if v < 0:
        raise ValidationError(f"{path}:{lineno}: {what} {text!r} is negative")
    return v


def load_dataset(path) -> Dataset:
    """Read ``id,x1,...,xd`` rows.  Repeated coordinate rows are dropped (first kept)."""
    rows = _rows(path)
    (_, header), body = rows[0], rows[1:]
    if len(header) < 2 or header[0].strip().lower() != "id":
        raise ValidationError(f"{path}:1: header must be id,x1,...,xd")
    d = len(header) - 1
    if not body:
        raise ValidationError(f"{path}: no data rows")
    labels, coords = [], []
    for lineno, row in body:
        if len(row) != d + 1:
            raise ValidationError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
        labels.append(row[0].strip())
        coords.append([_number(x, path, lineno, "coordinate") for x in row[1:]])
    ds = Dataset.from_rows(np.array(coords), labels=labels)
    for r in ds.dropped:
        logger.warning("%s: row %d (%s) duplicates an earlier point and was dropped", path, r + 2, labels[r])
    return ds


def write_dataset(D: Dataset, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"x{j + 1}" for j in range(D.dim)])
        for i in range(D.n):
            w.writerow([D.label(i)] + [repr(float(v)) for v in D.coords[i]])


def load_utility_matrix(path, dataset: Dataset | None = None) -> DiscreteDistribution:
    """Read ``prob,u1,...,un`` rows: one user per row, utilities in [0, 1].

    Probabilities summing to within 0.1% of one are renormalised.  If
    ``dataset`` dropped duplicate rows at load time, the matching utility
    columns are dropped as well.
    """
    rows = _rows(path)
    (_, header), body = rows[0], rows[1:]
    if len(header) < 2 or header[0].strip().lower() != "prob":
        raise ValidationError(f"{path}:1: header must be prob,u1,...,un")
    width = len(header) - 1
    if dataset is not None:
        expected = dataset.n + len(dataset.dropped)
        if width != expected:
            raise ValidationError(f"{path}: {width} utility columns but the dataset has {expected} rows")
    if not body:
        raise ValidationError(f"{path}: no users")
    probs, table = [], []
    for lineno, row in body:
        if len(row) != width + 1:
            raise ValidationError(f"{path}:{lineno}: expected {width + 1} fields, got {len(row)}")
        p = _number(row[0], path, lineno, "probability")
        u = [_number(x, path, lineno, "utility") for x in row[1:]]
        if any(x > 1 for x in u):
            raise ValidationError(f"{path}:{lineno}: utilities must lie in [0, 1]")
        if p <= 0:
            raise ValidationError(f"{path}:{lineno}: probability must be positive")
        probs.append(p)
        table.append(u)
    total = math.fsum(probs)
    if not 0.999 <= total <= 1.001:
        raise ValidationError(f"{path}: probabilities sum to {total!r}")
    probs = [p / total for p in probs]
    U = np.array(table)
    if dataset is not None:
        U = U[:, list(dataset.source_rows)]
    return DiscreteDistribution(tuple(TabularUtility(u) for u in U), tuple(probs))


def load_gmm(path) -> GaussianMixture:
    try:
        spec = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read mixture file {path}: {exc}") from exc
    return GaussianMixture.from_dict(spec)


def generate_synthetic(n: int, d: int, kind: str = "uniform", seed: int = 0) -> Dataset:
    """Uniform, correlated or anti-correlated points in [0, 1]^d.

    correlated: one base value per point plus +-0.05 jitter per attribute.
    anticorrelated: a uniform point projected onto sum(x) = d/2, plus
    +-0.05 jitter.  Everything is clamped to [0, 1].
    """
    if n < 1 or d < 1:
        raise ValidationError("n and d must be >= 1")
    if kind not in SYNTHETIC_KINDS:
        raise ValidationError(f"kind must be one of {SYNTHETIC_KINDS}")
    rng = make_rng(seed)
    if kind == "uniform":
        X = rng.random((n, d))
    elif kind == "correlated":
        base = rng.random((n, 1))
        X = base + rng.uniform(-JITTER, JITTER, (n, d))
    else:
        V = rng.random((n, d))
        X = V - (V.sum(axis=1, keepdims=True) - d / 2) / d
        X = X + rng.uniform(-JITTER, JITTER, (n, d))
    X = np.clip(X, 0.0, 1.0)
    return Dataset.from_rows(X, labels=[str(i) for i in range(n)])


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _encode(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {str(k): _encode(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


@dataclass
class RunReport:
    command: str
    algorithm: str
    config: dict
    solution: list[int] = field(default_factory=list)
    solution_labels: list[str] = field(default_factory=list)
    arr: float | None = None
    vrr: float | None = None
    stddev: float | None = None
    percentiles: dict = field(default_factory=dict)
    percentile_rule: str = "nearest-rank: sorted[ceil(q/100*N)-1]"
    evaluation: str = ""
    sample_size: int | None = None
    counters: dict = field(default_factory=dict)
    steepness: float | None = None
    bound: float | str | None = None
    optimal: bool | None = None
    rng: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    engines: list[dict] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return _encode(asdict(self))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        data = json.loads(text)
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported report schema {data.get('schema_version')!r}")
        return cls(**data)

    def write(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")
