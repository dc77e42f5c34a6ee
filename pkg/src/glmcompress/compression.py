"""MDL-guided ensemble compression.

Rows of the significance matrix are clustered with Ward's criterion, every
cut of the resulting dendrogram is scored by the mean per-term BIC of a
group-means model, and the cheapest cut is summarised by one representative
model per cluster (a medoid, or a GLM refit on the cluster's terms).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .data import Dataset
from .ensemble import Ensemble, LabeledMatrix
from .glm import FitError, GlmFit, fit_glm

#: Floor on the MLE residual variance of a per-term model.
VARIANCE_FLOOR = 1e-12

MEDOID = "medoid"
CENTROID = "centroid"


def _values(S) -> np.ndarray:
    return np.asarray(S.values if isinstance(S, LabeledMatrix) else S, dtype=float)


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    cost: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    """Agglomeration history over ``n_leaves`` rows.

    Leaves are nodes ``0..d-1``; the cluster created by merge ``s`` is node
    ``d + s``.  ``cost`` is the Ward increase in within-cluster sum of
    squares, ``|A||B|/(|A|+|B|) * ||c_A - c_B||^2``.
    """

    n_leaves: int
    merges: tuple[Merge, ...]

    def leaf_order(self) -> tuple[int, ...]:
        d = self.n_leaves
        if d == 1:
            return (0,)
        order = []
        stack = [d + len(self.merges) - 1]
        while stack:
            node = stack.pop()
            if node < d:
                order.append(node)
            else:
                m = self.merges[node - d]
                stack.append(m.right)
                stack.append(m.left)
        return tuple(order)

    def to_linkage(self) -> np.ndarray:
        """SciPy-style linkage rows ``[left, right, cost, size]``."""
        return np.array([[m.left, m.right, m.cost, m.size] for m in self.merges], dtype=float)


def ward_cluster(S) -> Dendrogram:
    """Ward agglomeration of the rows of ``S`` via Lance-Williams updates.

    Ties go to the lexicographically smallest pair of cluster ids.
    """
    X = _values(S)
    d = X.shape[0]
    if d < 1:
        raise ValueError("need at least one row to cluster")
    total = 2 * d - 1
    cost = np.full((total, total), np.inf)
    diff = X[:, None, :] - X[None, :, :]
    cost[:d, :d] = 0.5 * np.einsum("ijk,ijk->ij", diff, diff)
    size = np.zeros(total, dtype=int)
    size[:d] = 1
    active = list(range(d))
    merges = []
    for step in range(d - 1):
        sub = cost[np.ix_(active, active)]
        sub[np.tril_indices(len(active))] = np.inf
        a, b = np.unravel_index(np.argmin(sub), sub.shape)
        i, j = active[a], active[b]
        new = d + step
        ni, nj = size[i], size[j]
        cij = cost[i, j]
        others = [k for k in active if k != i and k != j]
        if others:
            nk = size[others]
            upd = ((ni + nk) * cost[i, others] + (nj + nk) * cost[j, others] - nk * cij) / (
                ni + nj + nk
            )
            cost[new, others] = upd
            cost[others, new] = upd
        size[new] = ni + nj
        merges.append(Merge(i, j, float(cij), int(ni + nj)))
        active = others + [new]
    return Dendrogram(d, tuple(merges))


@dataclass(frozen=True, eq=False)
class Membership:
    """Assignment of the ``d`` models to ``k`` clusters."""

    k: int
    labels: np.ndarray

    def members(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.k)]


def memberships_at(dendrogram: Dendrogram, k: int) -> Membership:
    """Cluster labels after undoing the last ``k - 1`` merges.

    Label ids follow first appearance along the dendrogram's leaf order.
    """
    d = dendrogram.n_leaves
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    owner = list(range(2 * d - 1))

    def find(x: int) -> int:
        while owner[x] != x:
            owner[x] = owner[owner[x]]
            x = owner[x]
        return x

    for step, m in enumerate(dendrogram.merges[: d - k]):
        new = d + step
        owner[find(m.left)] = new
        owner[find(m.right)] = new
    roots = [find(i) for i in range(d)]
    relabel: dict[int, int] = {}
    for leaf in dendrogram.leaf_order():
        relabel.setdefault(roots[leaf], len(relabel))
    return Membership(k, np.array([relabel[r] for r in roots], dtype=int))


def term_model_bic(
    s_col: Sequence[float], membership: Membership, variance_floor: float = VARIANCE_FLOOR
) -> float:
    """BIC of the group-means model predicting one S column from cluster labels.

    ``-2L = d * (log(2*pi*sigma2) + 1)`` with ``sigma2 = RSS / d`` (floored),
    penalty ``(k + 1) * log(d)``.
    """
    s = np.asarray(s_col, dtype=float)
    labels = np.asarray(membership.labels)
    d = s.shape[0]
    if labels.shape != (d,):
        raise ValueError("column length must equal the number of models")
    rss = _column_rss(s[:, None], labels, membership.k)[0]
    return float(_bic_from_rss(rss, d, membership.k, variance_floor))


def _column_rss(S: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    onehot = np.zeros((S.shape[0], k))
    onehot[np.arange(S.shape[0]), labels] = 1.0
    counts = onehot.sum(axis=0)
    means = (onehot.T @ S) / np.where(counts > 0, counts, 1.0)[:, None]
    resid = S - means[labels]
    return np.einsum("ij,ij->j", resid, resid)


def _bic_from_rss(rss, d: int, k: int, variance_floor: float):
    sigma2 = np.maximum(np.asarray(rss) / d, variance_floor)
    return d * (np.log(2.0 * math.pi * sigma2) + 1.0) + (k + 1) * math.log(d)


def cost_at_k(S, membership: Membership, variance_floor: float = VARIANCE_FLOOR) -> float:
    """Mean per-term BIC over all columns of ``S`` for one clustering."""
    X = _values(S)
    d, n = X.shape
    if n == 0:
        raise ValueError("cost is undefined for an ensemble with no terms")
    labels = np.asarray(membership.labels)
    if labels.shape != (d,):
        raise ValueError("membership length must equal the number of models")
    return float(np.mean(_per_term_bic(X, labels, membership.k, variance_floor)))


def _per_term_bic(X: np.ndarray, labels: np.ndarray, k: int, variance_floor: float) -> np.ndarray:
    return _bic_from_rss(_column_rss(X, labels, k), X.shape[0], k, variance_floor)


@dataclass(frozen=True)
class CostRecord:
    k: int
    cost: float
    bic_sum: float


@dataclass(frozen=True)
class CostProfile:
    records: tuple[CostRecord, ...]
    selected_k: int

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    def to_csv(self, header_comment: str | None = None) -> str:
        buf = io.StringIO()
        if header_comment is not None:
            buf.write(f"# {header_comment}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "cost", "bic_sum", "selected"])
        for r in self.records:
            writer.writerow([r.k, repr(r.cost), repr(r.bic_sum), int(r.k == self.selected_k)])
        return buf.getvalue()


def select_k(
    S,
    dendrogram: Dendrogram,
    k_max: int | None = None,
    threads: int = 1,
    variance_floor: float = VARIANCE_FLOOR,
) -> CostProfile:
    """Score every cut k = 1..k_max and pick the smallest minimiser of the cost.

    With the default floor, any cut that fits an S column exactly earns a
    likelihood bonus of roughly ``25 * d``, far above the ``log(d)`` price
    of an extra cluster, so ensembles with distinct rows tend to select
    ``k`` close to the number of distinct rows.  Raise ``variance_floor``
    to treat S values as known only to that variance.
    """
    X = _values(S)
    d, n = X.shape
    k_max = d if k_max is None else int(k_max)
    if not 1 <= k_max <= d:
        raise ValueError(f"k_max must be in [1, {d}]")
    if n == 0:
        # nothing to describe: a single cluster is the cheapest summary
        records = tuple(CostRecord(k, 0.0, 0.0) for k in range(1, k_max + 1))
        return CostProfile(records, 1)

    def score(k: int) -> CostRecord:
        m = memberships_at(dendrogram, k)
        bics = _per_term_bic(X, m.labels, k, variance_floor)
        return CostRecord(k, float(np.mean(bics)), float(np.sum(bics)))

    ks = range(1, k_max + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = tuple(pool.map(score, ks))
    else:
        records = tuple(score(k) for k in ks)
    costs = np.array([r.cost for r in records])
    return CostProfile(records, int(np.argmin(costs)) + 1)


@dataclass(frozen=True, eq=False)
class CompressedEnsemble:
    """One representative model per cluster of the original ensemble."""

    strategy: str
    k: int
    representatives: tuple[GlmFit, ...]
    members: tuple[tuple[int, ...], ...]
    notes: tuple[dict[str, Any], ...] = field(default=(), compare=False)

    @property
    def cluster_sizes(self) -> tuple[int, ...]:
        return tuple(len(m) for m in self.members)

    def weights(self, weighting: str = "size") -> np.ndarray:
        if weighting in ("size", "cluster_size"):
            w = np.array(self.cluster_sizes, dtype=float)
        elif weighting == "uniform":
            w = np.ones(self.k)
        else:
            raise ValueError(f"unknown weighting {weighting!r}")
        return w

    @property
    def n_terms(self) -> int:
        return len({t for m in self.representatives for t in m.terms})

    def to_dict(self) -> dict[str, Any]:
        clusters = []
        for c, (rep, mem) in enumerate(zip(self.representatives, self.members)):
            entry = {
                "size": len(mem),
                "memberIndices": list(mem),
                "representative": rep.to_dict(),
            }
            if self.notes and self.notes[c]:
                entry["notes"] = self.notes[c]
            clusters.append(entry)
        return {"strategy": self.strategy, "k": self.k, "clusters": clusters}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CompressedEnsemble:
        clusters = d["clusters"]
        return cls(
            strategy=d["strategy"],
            k=int(d["k"]),
            representatives=tuple(GlmFit.from_dict(c["representative"]) for c in clusters),
            members=tuple(tuple(int(i) for i in c["memberIndices"]) for c in clusters),
            notes=tuple(c.get("notes", {}) for c in clusters),
        )


def medoid_index(rows: np.ndarray) -> int:
    """Position of the row with the smallest summed Euclidean distance to the others."""
    rows = np.asarray(rows, dtype=float)
    diff = rows[:, None, :] - rows[None, :, :]
    sums = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)).sum(axis=1)
    best = sums.min()
    # sums equal up to rounding are ties (common in 1-D); lowest index wins
    return int(np.flatnonzero(sums <= best + 1e-12 * max(best, 1.0))[0])


def _centroid_terms(ensemble: Ensemble, members, n_obs: int, min_term_frequency: float):
    counts: dict[int, int] = {}
    for i in members:
        for t in ensemble.models[i].terms:
            counts[t] = counts.get(t, 0) + 1
    needed = min_term_frequency * len(members)
    terms = sorted(t for t, c in counts.items() if c >= needed and c > 0)
    cap = max(n_obs - 2, 0)
    truncated = len(terms) > cap
    if truncated:
        terms = sorted(sorted(terms, key=lambda t: (-counts[t], t))[:cap])
    return terms, truncated


def compress(
    ensemble: Ensemble,
    S,
    dendrogram: Dendrogram,
    selected_k: int,
    strategy: str = MEDOID,
    training_data: Dataset | None = None,
    min_term_frequency: float = 0.0,
) -> CompressedEnsemble:
    """Summarise each of the ``selected_k`` clusters by a single model.

    ``medoid`` keeps the member whose S row is most central (lowest index on
    ties).  ``centroid`` refits one GLM on ``training_data`` using the terms
    occurring in the cluster's members; ``min_term_frequency`` > 0 restricts
    this to terms present in at least that fraction of members.  A failed
    refit falls back to the medoid with a warning.
    """
    if strategy not in (MEDOID, CENTROID):
        raise ValueError(f"strategy must be 'medoid' or 'centroid', got {strategy!r}")
    if strategy == CENTROID and training_data is None:
        raise ValueError("centroid compression requires training data")
    X = _values(S)
    membership = memberships_at(dendrogram, selected_k)
    reps, members, notes = [], [], []
    # clusters ordered by lowest member index so that k = d keeps model order
    for idx in sorted(membership.members(), key=lambda m: m[0]):
        medoid = int(idx[medoid_index(X[idx])])
        note: dict[str, Any] = {}
        if strategy == MEDOID:
            rep = ensemble.models[medoid]
        else:
            terms, truncated = _centroid_terms(
                ensemble, idx, training_data.n_obs, min_term_frequency
            )
            if truncated:
                note["truncated"] = True
            try:
                rep = fit_glm(
                    training_data.features,
                    training_data.outcome,
                    terms,
                    ensemble.family,
                    training_data.feature_names,
                )
            except FitError as exc:
                warnings.warn(
                    f"centroid refit failed for cluster {len(reps)} ({exc}); using medoid",
                    stacklevel=2,
                )
                note["degenerate"] = str(exc)
                rep = ensemble.models[medoid]
        reps.append(rep)
        members.append(tuple(int(i) for i in idx))
        notes.append(note)
    return CompressedEnsemble(strategy, selected_k, tuple(reps), tuple(members), tuple(notes))
