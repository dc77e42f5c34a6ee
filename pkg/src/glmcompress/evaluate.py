"""Prediction, AUC, repeated cross-validation and paired t-tests."""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from . import __version__
from ._dist import t_upper
from .compression import CENTROID, MEDOID, VARIANCE_FLOOR, compress, select_k, ward_cluster
from .data import BINARY, Dataset, make_folds, standardize
from .ensemble import BagConfig, build_significance_matrix, fit_ensemble
from .glm import GlmFit

log = logging.getLogger(__name__)

METHODS = ("full", MEDOID, CENTROID)
_ROW_LABELS = {"full": "full", MEDOID: "medoid-compressed", CENTROID: "centroid-compressed"}


def predict(models: Sequence[GlmFit], X: np.ndarray, weights: Sequence[float] | None = None):
    """Weighted mean of member predictions (probabilities for binomial models)."""
    if not models:
        raise ValueError("no models to predict with")
    w = np.ones(len(models)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (len(models),):
        raise ValueError("one weight per model required")
    if np.any(w < 0) or not w.sum() > 0:
        raise ValueError("weights must be nonnegative with a positive sum")
    preds = np.stack([m.predict(X) for m in models])
    return np.average(preds, axis=0, weights=w)


def auc(scores: Sequence[float], labels: Sequence[float]) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative labels")
    ranks = rankdata(scores)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def paired_t_test(baseline: Sequence[float], comparison: Sequence[float]) -> float:
    """One-tailed paired t-test p-value for ``baseline > comparison``.

    Returns ``P(T >= t)`` with ``t = mean(diff) / (sd(diff) / sqrt(m))``,
    ``diff = baseline - comparison`` and ``m - 1`` degrees of freedom.
    A constant nonzero difference gives 0 or 1; identical samples raise.
    """
    a = np.asarray(baseline, dtype=float)
    b = np.asarray(comparison, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-D and equally long")
    m = a.size
    if m < 2:
        raise ValueError("need at least two pairs")
    diff = a - b
    sd = diff.std(ddof=1)
    if not sd > 0:
        # a constant nonzero shift is an infinite t statistic in its sign
        if diff[0] > 0:
            return 0.0
        if diff[0] < 0:
            return 1.0
        raise ValueError("samples are identical; t statistic undefined")
    t = diff.mean() / (sd / math.sqrt(m))
    return t_upper(t, m - 1)


@dataclass(frozen=True)
class FoldResult:
    repeat: int
    fold: int
    auc: dict[str, float]
    selected_k: int
    n_models: int
    n_terms: dict[str, int]


@dataclass(frozen=True)
class EvalReport:
    """Held-out AUCs per dataset, method, repeat and fold.

    ``p_values`` maps each compressed method to the one-tailed paired t-test
    of the per-dataset mean AUCs against the full ensemble; it is empty when
    fewer than two datasets were evaluated.
    """

    folds: dict[str, tuple[FoldResult, ...]]
    config: dict[str, Any] = field(default_factory=dict)
    p_values: dict[str, float | None] = field(default_factory=dict)

    @property
    def datasets(self) -> list[str]:
        return list(self.folds)

    def means(self) -> dict[str, dict[str, float]]:
        return {
            name: {m: float(np.mean([f.auc[m] for f in folds])) for m in METHODS}
            for name, folds in self.folds.items()
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": {"name": "glmcompress", "version": __version__},
            "config": self.config,
            "datasets": {
                name: [
                    {
                        "repeat": f.repeat,
                        "fold": f.fold,
                        "auc": f.auc,
                        "selectedK": f.selected_k,
                        "nModels": f.n_models,
                        "nTerms": f.n_terms,
                    }
                    for f in folds
                ]
                for name, folds in self.folds.items()
            },
            "means": self.means(),
            "pValues": self.p_values,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        """Aligned table: methods as rows, datasets as columns, then p-values."""
        means = self.means()
        names = self.datasets
        with_p = bool(self.p_values)
        header = [""] + names + (["P-value"] if with_p else [])
        rows = [header]
        for m in METHODS:
            row = [_ROW_LABELS[m]] + [f"{means[n][m]:.3f}" for n in names]
            if with_p:
                p = self.p_values.get(m)
                row.append("-" if m == "full" else ("nan" if p is None else f"{p:.3g}"))
            rows.append(row)
        widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
        lines = []
        for r in rows:
            cells = [r[0].ljust(widths[0])] + [r[c].rjust(widths[c]) for c in range(1, len(r))]
            lines.append("  ".join(cells).rstrip())
        return "\n".join(lines) + "\n"


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([p & 0xFFFFFFFFFFFFFFFF for p in parts]).generate_state(
        1, dtype=np.uint64
    )[0])


def evaluate_split(
    train: Dataset,
    test: Dataset,
    bag_config: BagConfig,
    *,
    k_max: int | None = None,
    weighting: str = "size",
    standardize_features: bool = True,
    threads: int = 1,
    variance_floor: float = VARIANCE_FLOOR,
) -> tuple[dict[str, float], int, int, dict[str, int]]:
    """Fit, compress and score one training/held-out split."""
    if standardize_features:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            train, record = standardize(train)
        test = record.apply(test)
    ensemble = fit_ensemble(train, bag_config, threads=threads)
    S = build_significance_matrix(ensemble)
    dendrogram = ward_cluster(S)
    profile = select_k(
        S,
        dendrogram,
        None if k_max is None else min(k_max, ensemble.d),
        variance_floor=variance_floor,
    )
    k = profile.selected_k
    full = predict(ensemble.models, test.features)
    scores = {"full": auc(full, test.outcome)}
    n_terms = {"full": len(ensemble.term_union)}
    for strategy in (MEDOID, CENTROID):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            comp = compress(ensemble, S, dendrogram, k, strategy, train)
        pred = predict(comp.representatives, test.features, comp.weights(weighting))
        scores[strategy] = auc(pred, test.outcome)
        n_terms[strategy] = comp.n_terms
    return scores, k, ensemble.d, n_terms


def cross_validate(
    dataset: Dataset,
    bag_config: BagConfig | None = None,
    n_folds: int = 3,
    n_repeats: int = 3,
    seed: int = 0,
    *,
    name: str = "dataset",
    k_max: int | None = None,
    weighting: str = "size",
    standardize_features: bool = True,
    threads: int = 1,
    variance_floor: float = VARIANCE_FLOOR,
) -> EvalReport:
    """Repeated stratified k-fold comparison of full, medoid and centroid ensembles.

    All randomness derives from ``seed``: it fixes the fold plan and, per
    (repeat, fold), the bagging seed (``bag_config.seed`` is overridden).
    """
    if dataset.outcome_kind != BINARY:
        raise ValueError("cross-validated AUC needs a binary outcome")
    bag_config = bag_config or BagConfig()
    plan = make_folds(dataset, n_folds, n_repeats, seed)
    results = []
    for r, f, train_idx, test_idx in plan.splits():
        cfg = replace(bag_config, seed=_derived_seed(seed, r, f))
        scores, k, d, n_terms = evaluate_split(
            dataset.subset(train_idx),
            dataset.subset(test_idx),
            cfg,
            k_max=k_max,
            weighting=weighting,
            standardize_features=standardize_features,
            threads=threads,
            variance_floor=variance_floor,
        )
        log.info("%s repeat %d fold %d: k=%d %s", name, r, f, k, scores)
        results.append(FoldResult(r, f, scores, k, d, n_terms))
    config = {
        "bag": bag_config.to_dict(),
        "folds": n_folds,
        "repeats": n_repeats,
        "seed": seed,
        "kMax": k_max,
        "weighting": weighting,
        "standardize": standardize_features,
        "varianceFloor": variance_floor,
    }
    return EvalReport({name: tuple(results)}, config)


def evaluate_datasets(
    datasets: Mapping[str, Dataset],
    bag_config: BagConfig | None = None,
    n_folds: int = 3,
    n_repeats: int = 3,
    seed: int = 0,
    **kwargs,
) -> EvalReport:
    """Cross-validate several datasets and t-test compressed vs full mean AUCs."""
    folds: dict[str, tuple[FoldResult, ...]] = {}
    config: dict[str, Any] = {}
    for name, ds in datasets.items():
        rep = cross_validate(ds, bag_config, n_folds, n_repeats, seed, name=name, **kwargs)
        folds.update(rep.folds)
        config = rep.config
    report = EvalReport(folds, config)
    if len(folds) < 2:
        warnings.warn("t-tests need at least two datasets; p-values omitted", stacklevel=2)
        return report
    return replace(report, p_values=t_tests_from_means(report.means()))


def t_tests_from_means(means: Mapping[str, Mapping[str, float]]) -> dict[str, float | None]:
    """Paired one-tailed tests of full vs each compressed method across datasets."""
    full = [means[n]["full"] for n in means]
    out: dict[str, float | None] = {}
    for method in (MEDOID, CENTROID):
        try:
            out[method] = paired_t_test(full, [means[n][method] for n in means])
        except ValueError:
            out[method] = None
    return out
