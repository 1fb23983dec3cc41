"""Datasets, splits, membership bookkeeping, and input transforms.

A dataset is an ordered pool of labelled vectors whose positions are their
ids, so subsets are plain boolean masks over [0, m).  The membership ledger
records, for each trained model, exactly which pool examples were in its
training subset; every attack in this package reads IN/OUT observations off
that ledger.
"""

from __future__ import annotations

import csv as _csv
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .nn import Example
from .seeding import derive_seed
from .serialize import digest_of

SubsetMask = np.ndarray  # boolean, length m


@dataclass
class Dataset:
    """Ordered example pool; ids are dense [0, m)."""

    X: np.ndarray  # [m, d] float64
    y: np.ndarray  # [m] int64
    k: int
    name: str = "dataset"
    seed: int = 0

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2:
            raise ValueError("X must be a 2-d array [m, d]")
        if len(self.X) != len(self.y):
            raise ValueError("X and y lengths differ")
        if len(self.X) < 2:
            raise ValueError("a dataset needs at least 2 examples")
        if not np.isfinite(self.X).all():
            raise ValueError("features must be finite")
        if self.k < 2:
            raise ValueError("need at least 2 classes")
        if (self.y < 0).any() or (self.y >= self.k).any():
            raise ValueError(f"labels must lie in [0, {self.k})")

    @property
    def m(self) -> int:
        return len(self.X)

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def example(self, i: int) -> Example:
        return Example(id=int(i), x=self.X[i], y=int(self.y[i]))

    def examples(self) -> Iterator[Example]:
        for i in range(self.m):
            yield self.example(i)

    def restrict(self, mask: SubsetMask, name: str | None = None) -> "Dataset":
        """New dataset from the masked rows, re-indexed to dense ids."""
        mask = _check_mask(self, mask)
        return Dataset(X=self.X[mask].copy(), y=self.y[mask].copy(), k=self.k,
                       name=name or f"{self.name}[{int(mask.sum())}]", seed=self.seed)


@dataclass
class MembershipLedger:
    """in_matrix[j, i] is True iff example i was in model j's training subset."""

    in_matrix: np.ndarray  # [n_models, m] bool

    def __post_init__(self) -> None:
        self.in_matrix = np.asarray(self.in_matrix, dtype=bool)
        if self.in_matrix.ndim != 2:
            raise ValueError("in_matrix must be 2-d [n_models, m]")

    @property
    def n_models(self) -> int:
        return self.in_matrix.shape[0]

    @property
    def m(self) -> int:
        return self.in_matrix.shape[1]


@dataclass(frozen=True)
class TransformSpec:
    """Label-preserving input transform: identity, mirror, or gaussian_jitter."""

    kind: str = "identity"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "mirror", "gaussian_jitter"):
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind == "gaussian_jitter" and not self.sigma > 0:
            raise ValueError("gaussian_jitter needs sigma > 0")


def _check_mask(dataset: Dataset, mask: SubsetMask) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (dataset.m,):
        raise ValueError(f"mask length {mask.shape} does not match dataset size {dataset.m}")
    return mask


def gen_gaussian_mixture(k: int, d: int, per_class: int, separation: float,
                         noise: float, seed: int) -> Dataset:
    """Isotropic Gaussian blobs with deterministic axis-aligned centers.

    Class c is centered at sign * separation * e_{c mod d} (sign alternates
    once the axes are exhausted), so `separation` is directly the distance
    of each center from the origin.  Fully determined by the arguments.
    """
    if k < 2 or d < 1 or per_class < 1:
        raise ValueError("need k >= 2, d >= 1, per_class >= 1")
    if not noise > 0:
        raise ValueError("noise must be positive")
    rng = np.random.default_rng(seed)
    X = np.empty((k * per_class, d))
    y = np.empty(k * per_class, dtype=np.int64)
    for c in range(k):
        center = np.zeros(d)
        center[c % d] = separation * (1.0 if (c // d) % 2 == 0 else -1.0)
        rows = slice(c * per_class, (c + 1) * per_class)
        X[rows] = center + noise * rng.standard_normal((per_class, d))
        y[rows] = c
    name = f"gauss_mix_k{k}_d{d}_n{per_class}_sep{separation:g}_noise{noise:g}"
    return Dataset(X=X, y=y, k=k, name=name, seed=int(seed))


@dataclass(frozen=True)
class CsvSchema:
    """Column layout for :func:`load_csv`.

    label_col indexes into each row (negative ok); all other columns are
    features.  n_features/n_classes, when given, are validated against the
    file; otherwise they are inferred.
    """

    label_col: int = -1
    n_features: int | None = None
    n_classes: int | None = None
    header: bool = False


def load_csv(path, schema: CsvSchema = CsvSchema(), name: str | None = None) -> Dataset:
    """Read a numeric CSV into a dataset; row order defines ids."""
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        for row in reader:
            if row:
                rows.append(row)
    if schema.header and rows:
        rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    expected = schema.n_features + 1 if schema.n_features is not None else width
    X_rows, labels = [], []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != expected:
            raise ValueError(f"{path}:{lineno}: expected {expected} columns, found {len(row)}")
        try:
            values = [float(cell) for cell in row]
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
        label_idx = schema.label_col % len(row)
        label = values.pop(label_idx)
        if label != int(label) or label < 0:
            raise ValueError(f"{path}:{lineno}: label {label!r} is not a nonnegative integer")
        X_rows.append(values)
        labels.append(int(label))
    y = np.array(labels, dtype=np.int64)
    k = schema.n_classes if schema.n_classes is not None else int(y.max()) + 1
    if (y >= k).any():
        bad = int(y.max())
        raise ValueError(f"{path}: label {bad} >= declared class count {k}")
    return Dataset(X=np.array(X_rows), y=y, k=k, name=name or str(path), seed=0)


def sample_subset(dataset: Dataset, fraction: float, seed: int) -> SubsetMask:
    """Uniform subset of floor(fraction * m) examples, without replacement."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    count = int(np.floor(fraction * dataset.m))
    if count < 1:
        raise ValueError(f"fraction {fraction} selects no examples from m={dataset.m}")
    return sample_count(dataset, count, seed)


def sample_count(dataset: Dataset, count: int, seed: int) -> SubsetMask:
    """Uniform subset of exactly `count` examples, without replacement."""
    if not 1 <= count <= dataset.m:
        raise ValueError(f"count must be in [1, {dataset.m}], got {count}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(dataset.m, size=count, replace=False)
    mask = np.zeros(dataset.m, dtype=bool)
    mask[idx] = True
    return mask


def select_lowest_curvature(dataset: Dataset, scores: np.ndarray, count: int) -> SubsetMask:
    """Mask of the `count` lowest-scoring examples; ties broken by lower id."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (dataset.m,):
        raise ValueError(f"need one score per example, got shape {scores.shape}")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    if not 0 <= count <= dataset.m:
        raise ValueError(f"count must be in [0, {dataset.m}], got {count}")
    # lexsort: primary key scores, secondary key id
    order = np.lexsort((np.arange(dataset.m), scores))
    mask = np.zeros(dataset.m, dtype=bool)
    mask[order[:count]] = True
    return mask


def apply_transform(example: Example, t: TransformSpec) -> Example:
    """Transformed copy of `example`; id and label are preserved.

    mirror reverses the feature vector in index order; gaussian_jitter adds
    N(0, sigma^2 I) noise drawn deterministically from (t.seed, example.id).
    """
    if t.kind == "identity":
        return example
    if t.kind == "mirror":
        return Example(id=example.id, x=example.x[::-1].copy(), y=example.y)
    rng = np.random.default_rng(derive_seed(t.seed, example.id))
    return Example(id=example.id, x=example.x + t.sigma * rng.standard_normal(example.x.shape),
                   y=example.y)


def dataset_digest(dataset: Dataset) -> str:
    return digest_of({
        "name": dataset.name,
        "seed": dataset.seed,
        "k": dataset.k,
        "X": dataset.X,
        "y": dataset.y,
    })


def dataset_to_dict(dataset: Dataset) -> dict:
    return {
        "name": dataset.name,
        "seed": dataset.seed,
        "k": dataset.k,
        "X": dataset.X.tolist(),
        "y": dataset.y.tolist(),
        "digest": dataset_digest(dataset),
    }


def dataset_from_dict(doc: dict) -> Dataset:
    ds = Dataset(X=np.asarray(doc["X"], dtype=np.float64),
                 y=np.asarray(doc["y"], dtype=np.int64),
                 k=int(doc["k"]), name=doc["name"], seed=int(doc["seed"]))
    recorded = doc.get("digest")
    if recorded is not None and recorded != dataset_digest(ds):
        raise ValueError("dataset digest mismatch; file corrupted or edited")
    return ds
