"""Tabular dataset container, CSV loading, synthetic generation, splitting.

A :class:`Dataset` is the currency every other module trades in: a row-major
float64 matrix with named, kinded features plus named binary label vectors.
Categorical cells hold level indices; the level strings live on the feature
so CSV round-trips are lossless.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import child_seed, generator

__all__ = [
    "Feature",
    "Dataset",
    "MarginalTarget",
    "Signal",
    "SynthSpec",
    "SplitPair",
    "DatasetError",
    "load_schema",
    "write_schema",
    "load_csv",
    "write_csv",
    "synth_generate",
    "stratified_split",
]

FEATURE_KINDS = ("continuous", "categorical", "binary")


class DatasetError(ValueError):
    """Raised for malformed files, schema mismatches, and contract violations."""


@dataclass(frozen=True)
class Feature:
    """A named column with its kind and, for categoricals, its level names."""

    name: str
    kind: str
    levels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in FEATURE_KINDS:
            raise DatasetError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == "categorical" and len(self.levels) < 1:
            raise DatasetError(f"categorical feature {self.name!r} needs levels")


@dataclass
class Dataset:
    """Immutable feature matrix plus binary label vectors.

    ``values`` is (rows, features) float64; categorical cells hold level
    indices. Arrays are frozen after construction so a Dataset can be shared
    across concurrent readers.
    """

    features: tuple[Feature, ...]
    values: np.ndarray
    labels: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DatasetError("values must be a 2-d matrix")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise DatasetError("feature names must be unique")
        if self.values.shape[1] != len(self.features):
            raise DatasetError(
                f"{len(self.features)} features but {self.values.shape[1]} value columns"
            )
        if not np.all(np.isfinite(self.values)):
            raise DatasetError("values must be finite (impute or drop missing cells)")
        labels = {}
        for key, vec in self.labels.items():
            arr = np.ascontiguousarray(vec, dtype=np.int64)
            if arr.shape != (self.rows,):
                raise DatasetError(f"label {key!r} has length {arr.shape}, want ({self.rows},)")
            if not np.isin(arr, (0, 1)).all():
                raise DatasetError(f"label {key!r} must be 0/1")
            arr.flags.writeable = False
            labels[key] = arr
        self.labels = labels
        self.values.flags.writeable = False

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def feature_index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise DatasetError(f"unknown feature {name!r}")

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_index(name)]

    def label(self, name: str) -> np.ndarray:
        if name not in self.labels:
            raise DatasetError(f"unknown label {name!r}")
        return self.labels[name]

    def subset_rows(self, indices: np.ndarray) -> "Dataset":
        """A new Dataset holding the given rows (copied, in index order)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features,
            values=self.values[idx].copy(),
            labels={k: v[idx].copy() for k, v in self.labels.items()},
        )

    def select_features(self, names: list[str] | tuple[str, ...]) -> "Dataset":
        """A new Dataset restricted to the named features, in the given order."""
        cols = [self.feature_index(n) for n in names]
        return Dataset(
            features=tuple(self.features[c] for c in cols),
            values=self.values[:, cols].copy(),
            labels={k: v.copy() for k, v in self.labels.items()},
        )


# ---------------------------------------------------------------------------
# schema files


def load_schema(path: str) -> dict[str, str]:
    """Parse a flat ``column = kind`` schema file.

    Blank lines and ``#`` comments are ignored. Kinds are the feature kinds
    plus ``label`` for outcome columns.
    """
    schema: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DatasetError(f"{path}:{lineno}: expected 'column = kind'")
            name, kind = (part.strip() for part in line.split("=", 1))
            if kind not in FEATURE_KINDS + ("label",):
                raise DatasetError(f"{path}:{lineno}: unknown kind {kind!r}")
            if name in schema:
                raise DatasetError(f"{path}:{lineno}: duplicate column {name!r}")
            schema[name] = kind
    if not schema:
        raise DatasetError(f"{path}: empty schema")
    return schema


def write_schema(path: str, ds: Dataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for feat in ds.features:
            fh.write(f"{feat.name} = {feat.kind}\n")
        for name in ds.labels:
            fh.write(f"{name} = label\n")


# ---------------------------------------------------------------------------
# CSV I/O


def _parse_number(cell: str, column: str, row: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DatasetError(
            f"row {row}, column {column!r}: non-numeric cell {cell!r}"
        ) from None


def load_csv(path: str, schema: dict[str, str], missing_policy: str = "error") -> Dataset:
    """Load a comma-separated UTF-8 file against a column-kind schema.

    The header must contain exactly the schema's columns (file order is
    preserved). Empty cells are missing; under ``impute`` continuous gaps
    take the column mean and categorical/binary gaps the column mode (mode
    ties break to the lowest level index). Missing label cells are always an
    error. Data rows are 1-indexed in error messages.
    """
    if missing_policy not in ("error", "impute"):
        raise DatasetError(f"unknown missing policy {missing_policy!r}")
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if set(header) != set(schema):
            missing = sorted(set(schema) - set(header))
            extra = sorted(set(header) - set(schema))
            raise DatasetError(
                f"{path}: header does not match schema"
                f" (missing {missing or 'nothing'}, unexpected {extra or 'nothing'})"
            )
        rows = [row for row in reader if row]

    n = len(rows)
    feature_cols = [name for name in header if schema[name] != "label"]
    label_cols = [name for name in header if schema[name] == "label"]

    values = np.zeros((n, len(feature_cols)), dtype=np.float64)
    missing_mask = np.zeros((n, len(feature_cols)), dtype=bool)
    level_maps: dict[str, dict[str, int]] = {name: {} for name in feature_cols}
    col_of = {name: j for j, name in enumerate(feature_cols)}
    labels = {name: np.zeros(n, dtype=np.int64) for name in label_cols}

    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DatasetError(f"row {i + 1}: expected {len(header)} cells, got {len(row)}")
        for name, cell in zip(header, row):
            cell = cell.strip()
            kind = schema[name]
            if kind == "label":
                if cell == "":
                    raise DatasetError(f"row {i + 1}, column {name!r}: missing label")
                value = _parse_number(cell, name, i + 1)
                if value not in (0.0, 1.0):
                    raise DatasetError(f"row {i + 1}, column {name!r}: label must be 0 or 1")
                labels[name][i] = int(value)
                continue
            j = col_of[name]
            if cell == "":
                if missing_policy == "error":
                    raise DatasetError(f"row {i + 1}, column {name!r}: missing value")
                missing_mask[i, j] = True
            elif kind == "categorical":
                levels = level_maps[name]
                if cell not in levels:
                    levels[cell] = len(levels)
                values[i, j] = levels[cell]
            else:
                value = _parse_number(cell, name, i + 1)
                if kind == "binary" and value not in (0.0, 1.0):
                    raise DatasetError(f"row {i + 1}, column {name!r}: binary cell must be 0 or 1")
                values[i, j] = value

    for name in feature_cols:
        j = col_of[name]
        gaps = missing_mask[:, j]
        if not gaps.any():
            continue
        present = values[~gaps, j]
        if present.size == 0:
            raise DatasetError(f"column {name!r}: all values missing, nothing to impute from")
        if schema[name] == "continuous":
            fill = float(present.mean())
        else:
            # mode over observed cells; ties break to the lowest level index
            idx, counts = np.unique(present.astype(np.int64), return_counts=True)
            fill = float(idx[np.argmax(counts)])
        values[gaps, j] = fill

    features = []
    for name in feature_cols:
        kind = schema[name]
        if kind == "categorical":
            ordered = tuple(sorted(level_maps[name], key=level_maps[name].__getitem__))
            if not ordered:
                raise DatasetError(f"column {name!r}: categorical column has no observed levels")
            features.append(Feature(name, kind, ordered))
        else:
            features.append(Feature(name, kind))
    return Dataset(features=tuple(features), values=values, labels=labels)


def _format_cell(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def write_csv(path: str, ds: Dataset) -> None:
    """Write a Dataset as UTF-8 CSV (categorical cells as level strings)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(ds.feature_names) + list(ds.labels))
        label_arrays = list(ds.labels.values())
        for i in range(ds.rows):
            row = []
            for j, feat in enumerate(ds.features):
                cell = ds.values[i, j]
                if feat.kind == "categorical":
                    row.append(feat.levels[int(cell)])
                else:
                    row.append(_format_cell(float(cell)))
            row.extend(str(int(vec[i])) for vec in label_arrays)
            writer.writerow(row)


# ---------------------------------------------------------------------------
# synthetic generation


@dataclass(frozen=True)
class MarginalTarget:
    """Target marginal distribution for one generated feature."""

    name: str
    kind: str = "continuous"
    mean: float = 0.0
    sd: float = 1.0
    min: float = -math.inf
    max: float = math.inf
    levels: int = 2  # categorical only

    def __post_init__(self) -> None:
        if self.kind not in FEATURE_KINDS:
            raise DatasetError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.sd < 0:
            raise DatasetError(f"degenerate marginal for {self.name!r}: sd < 0")
        if self.max < self.min:
            raise DatasetError(f"degenerate marginal for {self.name!r}: max < min")
        if self.kind == "categorical" and self.levels < 2:
            raise DatasetError(f"categorical {self.name!r} needs >= 2 levels")
        if self.kind == "binary" and not 0.0 <= self.mean <= 1.0:
            raise DatasetError(f"binary {self.name!r} needs mean in [0, 1]")


@dataclass(frozen=True)
class Signal:
    """Latent generating function: linear terms plus pairwise interactions.

    Coefficients apply to features standardized by their marginal targets,
    so signal strength is comparable across features. At least one
    interaction term must be present (its coefficient may be zero).
    """

    linear: dict[str, float] = field(default_factory=dict)
    interactions: tuple[tuple[str, str, float], ...] = ()

    def __post_init__(self) -> None:
        if len(self.interactions) < 1:
            raise DatasetError("signal needs at least one pairwise interaction term")


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a seeded synthetic dataset with a controllable rare outcome."""

    n: int
    positive_rate: float
    feature_marginals: tuple[MarginalTarget, ...]
    signal: Signal
    anomaly_shift: dict[str, float] = field(default_factory=dict)
    label_name: str = "outcome"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DatasetError("n must be >= 1")
        if not 0.0 < self.positive_rate < 1.0:
            raise DatasetError("positive_rate must lie in (0, 1)")
        names = {m.name for m in self.feature_marginals}
        if len(names) != len(self.feature_marginals):
            raise DatasetError("duplicate feature names in marginals")
        for ref in list(self.signal.linear) + [
            n for a, b, _ in self.signal.interactions for n in (a, b)
        ]:
            if ref not in names:
                raise DatasetError(f"signal references unknown feature {ref!r}")
        for ref in self.anomaly_shift:
            if ref not in names:
                raise DatasetError(f"anomaly_shift references unknown feature {ref!r}")
            kind = next(m.kind for m in self.feature_marginals if m.name == ref)
            if kind != "continuous":
                raise DatasetError(f"anomaly_shift only applies to continuous features ({ref!r})")


def _standardized(column: np.ndarray, target: MarginalTarget) -> np.ndarray:
    scale = target.sd if target.sd > 0 else 1.0
    return (column - target.mean) / scale


def _calibrate_intercept(latent: np.ndarray, rate: float) -> float:
    """Bisect the intercept b so that mean(sigmoid(latent + b)) == rate."""
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        mean = float(np.mean(1.0 / (1.0 + np.exp(-(latent + mid)))))
        if mean < rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def synth_generate(spec: SynthSpec) -> Dataset:
    """Generate a Dataset from a SynthSpec, deterministically in (spec, seed).

    Features are drawn independently per column: clipped normals for
    continuous targets, Bernoulli(mean) for binary, uniform over levels for
    categorical. The label is Bernoulli per row with probability
    sigmoid(latent + b); the intercept b is calibrated so the mean
    probability equals ``positive_rate`` (zero signal makes every row's
    probability exactly the target rate). Positive rows then receive the
    per-feature ``anomaly_shift``, which may push cells past the marginal
    clip bounds by design.
    """
    rng = generator(child_seed(spec.seed, "synth"))
    n = spec.n
    columns: dict[str, np.ndarray] = {}
    features: list[Feature] = []
    for target in spec.feature_marginals:
        if target.kind == "continuous":
            col = rng.normal(target.mean, target.sd, size=n)
            col = np.clip(col, target.min, target.max)
            features.append(Feature(target.name, "continuous"))
        elif target.kind == "binary":
            col = (rng.random(n) < target.mean).astype(np.float64)
            features.append(Feature(target.name, "binary"))
        else:
            col = rng.integers(0, target.levels, size=n).astype(np.float64)
            levels = tuple(f"L{i}" for i in range(target.levels))
            features.append(Feature(target.name, "categorical", levels))
        columns[target.name] = col

    targets = {m.name: m for m in spec.feature_marginals}
    latent = np.zeros(n, dtype=np.float64)
    for name, coef in spec.signal.linear.items():
        if coef != 0.0:
            latent += coef * _standardized(columns[name], targets[name])
    for a, b, coef in spec.signal.interactions:
        if coef != 0.0:
            latent += coef * _standardized(columns[a], targets[a]) * _standardized(
                columns[b], targets[b]
            )

    intercept = _calibrate_intercept(latent, spec.positive_rate)
    prob = 1.0 / (1.0 + np.exp(-(latent + intercept)))
    label = (rng.random(n) < prob).astype(np.int64)

    for name, shift in spec.anomaly_shift.items():
        if shift != 0.0:
            col = columns[name].copy()
            col[label == 1] += shift
            columns[name] = col

    values = np.column_stack([columns[f.name] for f in features])
    return Dataset(features=tuple(features), values=values, labels={spec.label_name: label})


# ---------------------------------------------------------------------------
# stratified splitting


@dataclass(frozen=True)
class SplitPair:
    """Train/test partition of a source dataset, stratified on one label."""

    train: Dataset
    test: Dataset
    fraction: float
    stratify_on: str


def stratified_split(ds: Dataset, fraction: float, label: str, seed: int) -> SplitPair:
    """Split per class: train takes floor(fraction * class count), rest test.

    Rows within each class are shuffled by the seed before the cut; both
    sides keep ascending source-row order so output is independent of class
    processing order. Classes are processed in ascending label value.
    """
    if not 0.0 < fraction < 1.0:
        raise DatasetError(f"fraction must lie strictly in (0, 1), got {fraction}")
    y = ds.label(label)
    rng = generator(child_seed(seed, "split"))
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        if members.size == 0:
            raise DatasetError(f"label {label!r} has no rows of class {cls}")
        shuffled = members[rng.permutation(members.size)]
        cut = int(math.floor(fraction * members.size))
        train_idx.append(shuffled[:cut])
        test_idx.append(shuffled[cut:])
    train_rows = np.sort(np.concatenate(train_idx))
    test_rows = np.sort(np.concatenate(test_idx))
    return SplitPair(
        train=ds.subset_rows(train_rows),
        test=ds.subset_rows(test_rows),
        fraction=fraction,
        stratify_on=label,
    )
