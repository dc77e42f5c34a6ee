"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports the package's numerical code paths.
"""

import itertools
import math

import numpy as np
from scipy import stats


def naive_ward(X):
    """Ward agglomeration recomputing centroids from scratch each step.

    Returns a list of (left_id, right_id, cost) with scipy-style node ids.
    """
    X = np.asarray(X, dtype=float)
    d = X.shape[0]
    clusters = {i: [i] for i in range(d)}
    merges = []
    next_id = d
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            A, B = X[clusters[a]], X[clusters[b]]
            na, nb = len(A), len(B)
            diff = A.mean(axis=0) - B.mean(axis=0)
            cost = na * nb / (na + nb) * float(diff @ diff)
            if best is None or cost < best[2]:
                best = (a, b, cost)
        a, b, cost = best
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        merges.append((a, b, cost))
        next_id += 1
    return merges


def naive_partition(merges, d, k):
    """Sets of leaves after applying the first d - k merges."""
    groups = {i: {i} for i in range(d)}
    for step, (a, b, _) in enumerate(merges[: d - k]):
        groups[d + step] = groups.pop(a) | groups.pop(b)
    return sorted((frozenset(g) for g in groups.values()), key=min)


def anova_bic(col, labels, floor=1e-12):
    """Group-means Gaussian BIC with residuals accumulated in plain Python."""
    col = [float(v) for v in col]
    d = len(col)
    groups = {}
    for v, g in zip(col, labels):
        groups.setdefault(int(g), []).append(v)
    rss = 0.0
    for values in groups.values():
        m = sum(values) / len(values)
        rss += sum((v - m) ** 2 for v in values)
    sigma2 = max(rss / d, floor)
    return d * (math.log(2 * math.pi * sigma2) + 1) + (len(groups) + 1) * math.log(d)


def anova_bic_logpdf(col, labels):
    """Same BIC via scipy's normal log-density (valid when RSS > 0)."""
    col = np.asarray(col, dtype=float)
    labels = np.asarray(labels)
    fitted = np.array([col[labels == g].mean() for g in labels])
    sigma = math.sqrt(np.sum((col - fitted) ** 2) / len(col))
    loglik = stats.norm.logpdf(col, loc=fitted, scale=sigma).sum()
    return -2 * loglik + (len(set(labels.tolist())) + 1) * math.log(len(col))


def brute_medoid(rows):
    rows = [np.asarray(r, dtype=float) for r in rows]
    sums = [sum(math.dist(a, b) for b in rows) for a in rows]
    best = min(sums)
    # equal sums up to rounding count as ties; lowest index wins
    return next(i for i, v in enumerate(sums) if v <= best + 1e-12 * max(best, 1.0))


def brute_auc(scores, labels):
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else (0.5 if p == n else 0.0)
    return total / (len(pos) * len(neg))


def normal_equations_ols(X, y):
    """OLS through the normal equations with scipy's Student-t survival function."""
    n, p = X.shape
    Z = np.column_stack([np.ones(n), X])
    G = Z.T @ Z
    beta = np.linalg.solve(G, Z.T @ y)
    resid = y - Z @ beta
    df = n - p - 1
    sigma2 = resid @ resid / df
    se = np.sqrt(sigma2 * np.diag(np.linalg.inv(G)))
    pvals = 2 * stats.t.sf(np.abs(beta / se), df)
    return beta, se, pvals


def logistic_score(X, y, intercept, coef):
    Z = np.column_stack([np.ones(len(y)), X])
    beta = np.concatenate([[intercept], coef])
    mu = 1.0 / (1.0 + np.exp(-(Z @ beta)))
    return Z.T @ (y - mu)
