"""Bagged GLM ensembles and their coefficient (B) and significance (S) matrices."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .data import BINARY, Dataset
from .glm import BINOMIAL, GAUSSIAN, GlmFit, SelectionConfig, stepwise_select
from ._dist import floor_p

MAX_BOOTSTRAP_ATTEMPTS = 100


@dataclass(frozen=True)
class BagConfig:
    """Bagging settings.

    ``features_per_bag=None`` means ``ceil(sqrt(n_features))`` and
    ``candidate_cap=None`` means ``min(30, features_per_bag)``.
    """

    n_bags: int = 100
    features_per_bag: int | None = None
    candidate_cap: int | None = None
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_bags < 1:
            raise ValueError("n_bags must be >= 1")
        if self.features_per_bag is not None and self.features_per_bag < 1:
            raise ValueError("features_per_bag must be >= 1")
        if self.candidate_cap is not None and self.candidate_cap < 1:
            raise ValueError("candidate_cap must be >= 1")

    def resolved(self, n_features: int) -> tuple[int, int]:
        fpb = self.features_per_bag or math.ceil(math.sqrt(n_features))
        cap = self.candidate_cap or min(30, fpb)
        return fpb, cap

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> BagConfig:
        d = dict(d)
        d["selection"] = SelectionConfig(**d.get("selection", {}))
        return cls(**d)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """``d`` fitted models sharing a family, plus the union of their terms."""

    models: tuple[GlmFit, ...]
    feature_names: tuple[str, ...]
    family: str
    bag_seed: int = 0
    config: BagConfig | None = None
    training_meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.models:
            raise ValueError("an ensemble needs at least one model")
        if any(m.family != self.family for m in self.models):
            raise ValueError("all ensemble members must share the family")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def d(self) -> int:
        return len(self.models)

    @property
    def term_union(self) -> tuple[int, ...]:
        return tuple(sorted({t for m in self.models for t in m.terms}))

    @property
    def term_names(self) -> tuple[str, ...]:
        return tuple(self.feature_names[t] for t in self.term_union)

    def term_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for m in self.models:
            for t in m.terms:
                counts[t] = counts.get(t, 0) + 1
        return counts

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict() if self.config else None,
            "family": self.family,
            "bagSeed": self.bag_seed,
            "featureNames": list(self.feature_names),
            "termUnion": list(self.term_names),
            "trainingMeta": self.training_meta,
            "models": [m.to_dict() for m in self.models],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Ensemble:
        config = BagConfig.from_dict(d["config"]) if d.get("config") else None
        return cls(
            models=tuple(GlmFit.from_dict(m) for m in d["models"]),
            feature_names=tuple(d["featureNames"]),
            family=d["family"],
            bag_seed=d.get("bagSeed", 0),
            config=config,
            training_meta=d.get("trainingMeta", {}),
        )


def _abs_correlation(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    denom = np.sqrt((Xc * Xc).sum(axis=0) * (yc @ yc))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.abs(Xc.T @ yc) / denom
    return np.where(np.isfinite(r), r, 0.0)


def _fit_bag(dataset: Dataset, config: BagConfig, family: str, bag: int) -> GlmFit:
    rng = np.random.default_rng([config.seed & 0xFFFFFFFFFFFFFFFF, bag])
    n, p = dataset.n_obs, dataset.n_features
    fpb, cap = config.resolved(p)
    y_all = dataset.outcome
    for _ in range(MAX_BOOTSTRAP_ATTEMPTS):
        rows = rng.integers(0, n, size=n)
        y = y_all[rows]
        if family != BINOMIAL or 0.0 < y.mean() < 1.0:
            break
    else:
        raise RuntimeError(
            f"bag {bag}: no bootstrap sample with both classes in {MAX_BOOTSTRAP_ATTEMPTS} attempts"
        )
    features = np.sort(rng.choice(p, size=fpb, replace=False))
    X = dataset.features[rows]
    strength = _abs_correlation(X[:, features], y)
    order = np.argsort(-strength, kind="stable")
    candidates = features[order[:cap]]
    return stepwise_select(
        X, y, candidates, family, config.selection, names=dataset.feature_names
    )


def fit_ensemble(dataset: Dataset, config: BagConfig | None = None, threads: int = 1) -> Ensemble:
    """Fit ``config.n_bags`` stepwise GLMs on bootstrap/feature-subsampled bags.

    Each bag draws from its own RNG stream seeded by ``(seed, bag_index)``,
    so the result does not depend on ``threads``.
    """
    config = config or BagConfig()
    fpb, _ = config.resolved(dataset.n_features)
    if fpb > dataset.n_features:
        raise ValueError(
            f"features_per_bag={fpb} exceeds the {dataset.n_features} available features"
        )
    family = BINOMIAL if dataset.outcome_kind == BINARY else GAUSSIAN

    def work(bag: int) -> GlmFit:
        return _fit_bag(dataset, config, family, bag)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            models = list(pool.map(work, range(config.n_bags)))
    else:
        models = [work(b) for b in range(config.n_bags)]
    return Ensemble(
        models=tuple(models),
        feature_names=dataset.feature_names,
        family=family,
        bag_seed=config.seed,
        config=config,
    )


@dataclass(frozen=True, eq=False)
class LabeledMatrix:
    """A d x n matrix with model (row) and term (column) labels."""

    values: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment is not None:
            buf.write(f"# {header_comment}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", *self.col_labels])
        for label, row in zip(self.row_labels, self.values):
            writer.writerow([label, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> LabeledMatrix:
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        rows = list(csv.reader(lines))
        header, body = rows[0], rows[1:]
        values = np.array([[float(v) for v in r[1:]] for r in body], dtype=float)
        values = values.reshape(len(body), len(header) - 1)
        return cls(values, tuple(r[0] for r in body), tuple(header[1:]))


CoefficientMatrix = LabeledMatrix
SignificanceMatrix = LabeledMatrix


def _model_labels(d: int) -> tuple[str, ...]:
    return tuple(f"model_{i + 1}" for i in range(d))


def _scatter(ensemble: Ensemble, attr) -> np.ndarray:
    col = {t: j for j, t in enumerate(ensemble.term_union)}
    out = np.zeros((ensemble.d, len(col)))
    for i, m in enumerate(ensemble.models):
        for t, v in zip(m.terms, attr(m)):
            out[i, col[t]] = v
    return out


def build_coefficient_matrix(ensemble: Ensemble) -> LabeledMatrix:
    """B: coefficient of term j in model i, 0 where the term is absent."""
    values = _scatter(ensemble, lambda m: m.coefficients)
    return LabeledMatrix(values, _model_labels(ensemble.d), ensemble.term_names)


def build_significance_matrix(ensemble: Ensemble) -> LabeledMatrix:
    """S: -log10 of each term's p-value (floored at 1e-300), 0 where absent."""
    values = _scatter(ensemble, lambda m: -np.log10(floor_p(m.p_values)))
    # -log10(1) is -0.0; keep absent and p=1 entries as +0.0
    values = values + 0.0
    return LabeledMatrix(values, _model_labels(ensemble.d), ensemble.term_names)
