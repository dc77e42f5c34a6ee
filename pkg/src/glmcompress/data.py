"""Tabular dataset loading, standardization and stratified fold plans."""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


class DataError(ValueError):
    """Raised when input data violates a loading or validation contract."""


BINARY = "binary"
CONTINUOUS = "continuous"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric feature matrix with named columns and one outcome vector.

    Parameters
    ----------
    features : ndarray, shape (n_obs, n_features)
    outcome : ndarray, shape (n_obs,)
        0/1 floats for binary outcomes, arbitrary reals otherwise.
    feature_names : tuple of str
    outcome_kind : {"binary", "continuous"}
    metadata : dict
        Free-form record; ``label_mapping`` holds string-label encodings.
    """

    features: np.ndarray
    outcome: np.ndarray
    feature_names: tuple[str, ...]
    outcome_kind: str = BINARY
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.outcome, dtype=float)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if y.shape != (X.shape[0],):
            raise DataError("outcome length must equal the number of rows")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != X.shape[1]:
            raise DataError("feature_names length must equal the number of columns")
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DataError("dataset contains missing or non-finite values")
        if self.outcome_kind not in (BINARY, CONTINUOUS):
            raise DataError(f"unknown outcome kind {self.outcome_kind!r}")
        if self.outcome_kind == BINARY:
            if not np.all((y == 0) | (y == 1)):
                raise DataError("binary outcome must be coded 0/1")
            if y.min() == y.max():
                raise DataError("binary outcome contains a single class")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_obs(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def subset(self, rows: np.ndarray) -> Dataset:
        """Return the dataset restricted to ``rows`` (order preserved)."""
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            self.features[rows],
            self.outcome[rows],
            self.feature_names,
            self.outcome_kind,
            dict(self.metadata),
        )


def _parse_float(text: str) -> float | None:
    text = text.strip()
    if text == "" or text.upper() in ("NA", "NAN"):
        return None
    value = float(text)
    if not math.isfinite(value):
        return None
    return value


def load_csv(
    path: str | Path,
    outcome_column: str,
    *,
    impute_missing: bool = False,
    outcome_kind: str | None = None,
) -> Dataset:
    """Load a header-first UTF-8 CSV into a validated :class:`Dataset`.

    Every non-outcome column must be numeric.  Blank feature cells raise
    unless ``impute_missing`` is set, in which case they take the column
    mean.  The outcome may be 0/1, two string labels (first label seen
    maps to 0) or, with ``outcome_kind="continuous"``, any real numbers.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if outcome_column not in header:
        raise DataError(f"unknown outcome column {outcome_column!r}")
    if len(set(header)) != len(header):
        raise DataError("duplicate column names in header")
    y_col = header.index(outcome_column)
    feat_cols = [i for i in range(len(header)) if i != y_col]

    X = np.empty((len(body), len(feat_cols)))
    raw_outcome = []
    for r, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DataError(f"row {r} has {len(row)} cells, expected {len(header)}")
        for c, col in enumerate(feat_cols):
            try:
                value = _parse_float(row[col])
            except ValueError:
                raise DataError(
                    f"non-numeric value {row[col]!r} at row {r}, col {col + 1}"
                ) from None
            if value is None:
                if not impute_missing:
                    raise DataError(f"missing value at row {r}, col {col + 1}")
                value = np.nan
            X[r - 1, c] = value
        cell = row[y_col].strip()
        if cell == "":
            raise DataError(f"missing value at row {r}, col {y_col + 1}")
        raw_outcome.append(cell)

    if impute_missing and np.isnan(X).any():
        means = np.nanmean(X, axis=0)
        if np.isnan(means).any():
            raise DataError("cannot impute a column with no observed values")
        holes = np.isnan(X)
        X[holes] = np.take(means, np.nonzero(holes)[1])

    y, kind, mapping = _encode_outcome(raw_outcome, outcome_kind)
    metadata: dict[str, Any] = {"source": str(path), "outcome_column": outcome_column}
    if mapping is not None:
        metadata["label_mapping"] = mapping
    return Dataset(X, y, tuple(header[i] for i in feat_cols), kind, metadata)


def _encode_outcome(cells: list[str], kind: str | None):
    numeric = []
    for cell in cells:
        try:
            numeric.append(float(cell))
        except ValueError:
            numeric = None
            break
    if numeric is not None:
        y = np.asarray(numeric)
        if kind == CONTINUOUS:
            return y, CONTINUOUS, None
        if np.all((y == 0) | (y == 1)):
            if len(np.unique(y)) < 2:
                raise DataError("binary outcome contains a single class")
            return y, BINARY, None
        if kind == BINARY:
            raise DataError("binary outcome must be 0/1 or two string labels")
        return y, CONTINUOUS, None

    if kind == CONTINUOUS:
        raise DataError("continuous outcome contains non-numeric labels")
    labels: list[str] = []
    for cell in cells:
        if cell not in labels:
            labels.append(cell)
    if len(labels) == 1:
        raise DataError("binary outcome contains a single class")
    if len(labels) > 2:
        raise DataError(f"outcome has {len(labels)} distinct labels, expected 2")
    mapping = {labels[0]: 0, labels[1]: 1}
    return np.array([mapping[c] for c in cells], dtype=float), BINARY, mapping


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature centring and scaling learned on a training split."""

    mean: np.ndarray
    scale: np.ndarray
    constant: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def apply(self, dataset: Dataset) -> Dataset:
        return Dataset(
            self.transform(dataset.features),
            dataset.outcome,
            dataset.feature_names,
            dataset.outcome_kind,
            dict(dataset.metadata),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "constant": self.constant.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Standardizer:
        return cls(
            np.asarray(d["mean"], dtype=float),
            np.asarray(d["scale"], dtype=float),
            np.asarray(d["constant"], dtype=bool),
        )

    @classmethod
    def identity(cls, n_features: int) -> Standardizer:
        return cls(np.zeros(n_features), np.ones(n_features), np.zeros(n_features, bool))


def standardize(dataset: Dataset) -> tuple[Dataset, Standardizer]:
    """Centre each feature to mean 0 and scale to sample sd 1 (n-1 denominator).

    Constant columns are centred to zero, keep scale 1 and trigger a warning.
    """
    X = dataset.features
    mean = X.mean(axis=0)
    if dataset.n_obs > 1:
        sd = X.std(axis=0, ddof=1)
    else:
        sd = np.zeros(X.shape[1])
    constant = ~(sd > 0)
    if constant.any():
        names = [dataset.feature_names[i] for i in np.flatnonzero(constant)]
        warnings.warn(f"constant feature column(s) left unscaled: {names}", stacklevel=2)
    scale = np.where(constant, 1.0, sd)
    record = Standardizer(mean, scale, constant)
    return record.apply(dataset), record


@dataclass(frozen=True, eq=False)
class FoldPlan:
    """Held-out index sets for repeated k-fold cross-validation.

    ``assignments[r][f]`` is the sorted array of held-out row indices for
    fold ``f`` of repeat ``r``.
    """

    n_folds: int
    n_repeats: int
    seed: int
    assignments: tuple[tuple[np.ndarray, ...], ...]
    n_obs: int

    def splits(self):
        """Yield ``(repeat, fold, train_idx, test_idx)`` in repeat-major order."""
        everything = np.arange(self.n_obs)
        for r, folds in enumerate(self.assignments):
            for f, test in enumerate(folds):
                yield r, f, np.setdiff1d(everything, test), test

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_folds": self.n_folds,
                "n_repeats": self.n_repeats,
                "seed": self.seed,
                "n_obs": self.n_obs,
                "assignments": [[fold.tolist() for fold in rep] for rep in self.assignments],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> FoldPlan:
        d = json.loads(text)
        assignments = tuple(
            tuple(np.asarray(fold, dtype=int) for fold in rep) for rep in d["assignments"]
        )
        return cls(d["n_folds"], d["n_repeats"], d["seed"], assignments, d["n_obs"])


def make_folds(dataset: Dataset, n_folds: int = 3, n_repeats: int = 3, seed: int = 0) -> FoldPlan:
    """Build a stratified, seed-deterministic repeated k-fold plan.

    Within each repeat, the members of each class are shuffled and dealt to
    folds round-robin; the dealing position carries over between classes so
    that fold sizes also differ by at most one.
    """
    if n_folds < 2:
        raise ValueError("n_folds must be at least 2")
    if n_repeats < 1:
        raise ValueError("n_repeats must be at least 1")
    y = dataset.outcome
    if dataset.outcome_kind == BINARY:
        strata = [np.flatnonzero(y == 0), np.flatnonzero(y == 1)]
        for label, members in zip((0, 1), strata):
            if len(members) < n_folds:
                raise DataError(
                    f"class {label} has {len(members)} observations, "
                    f"too few to stratify into {n_folds} folds"
                )
    else:
        if dataset.n_obs < n_folds:
            raise DataError("fewer observations than folds")
        strata = [np.arange(dataset.n_obs)]

    repeats = []
    for r in range(n_repeats):
        rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, r])
        fold_of = np.empty(dataset.n_obs, dtype=int)
        start = int(rng.integers(n_folds))
        for members in strata:
            shuffled = rng.permutation(members)
            fold_of[shuffled] = (start + np.arange(len(shuffled))) % n_folds
            start = (start + len(shuffled)) % n_folds
        repeats.append(tuple(np.flatnonzero(fold_of == f) for f in range(n_folds)))
    return FoldPlan(n_folds, n_repeats, seed, tuple(repeats), dataset.n_obs)
