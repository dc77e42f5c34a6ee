"""Single-model GLM fitting: Gaussian OLS and binomial IRLS, with inference.

Fits take the full feature matrix plus the column indices (``terms``) to
use, so that the returned :class:`GlmFit` refers to dataset columns
directly.  An intercept is always included and never counted as a term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.special import expit

from ._dist import floor_p, normal_two_sided, t_two_sided

GAUSSIAN = "gaussian"
BINOMIAL = "binomial"

#: |beta| above this (standardized features) marks an IRLS fit as diverged.
DIVERGENCE_BOUND = 1e4
#: |linear predictor| above this means fitted probabilities are numerically 0/1.
SEPARATION_ETA = 30.0


class FitError(ValueError):
    """Raised when a model cannot be fitted (rank deficiency, too few rows...)."""


@dataclass(frozen=True, eq=False)
class GlmFit:
    """One fitted GLM.

    ``coefficients``, ``std_errors`` and ``p_values`` are aligned with
    ``terms`` (feature column indices, ascending) and exclude the intercept.
    """

    family: str
    terms: tuple[int, ...]
    term_names: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    std_errors: np.ndarray
    p_values: np.ndarray
    log_likelihood: float
    n_obs: int
    converged: bool = True
    deviance_trace: tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def n_params(self) -> int:
        """Parameters counted by the information criteria."""
        return 1 + len(self.terms) + (1 if self.family == GAUSSIAN else 0)

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.terms and max(self.terms) >= X.shape[1]:
            raise IndexError(
                f"model references feature {max(self.terms)}, matrix has {X.shape[1]} columns"
            )
        eta = np.full(X.shape[0], self.intercept)
        if self.terms:
            eta = eta + X[:, list(self.terms)] @ self.coefficients
        return eta

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Mean response: probabilities for binomial, linear predictor for gaussian."""
        eta = self.linear_predictor(X)
        return expit(eta) if self.family == BINOMIAL else eta

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "intercept": self.intercept,
            "terms": [
                {"index": i, "name": n, "beta": float(b), "se": float(s), "p": float(p)}
                for i, n, b, s, p in zip(
                    self.terms, self.term_names, self.coefficients, self.std_errors, self.p_values
                )
            ],
            "logLik": self.log_likelihood,
            "nObs": self.n_obs,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> GlmFit:
        terms = d["terms"]
        return cls(
            family=d["family"],
            terms=tuple(int(t["index"]) for t in terms),
            term_names=tuple(t["name"] for t in terms),
            intercept=float(d["intercept"]),
            coefficients=np.array([t["beta"] for t in terms], dtype=float),
            std_errors=np.array([t["se"] for t in terms], dtype=float),
            p_values=np.array([t["p"] for t in terms], dtype=float),
            log_likelihood=float(d["logLik"]),
            n_obs=int(d["nObs"]),
            converged=bool(d["converged"]),
        )


@dataclass(frozen=True)
class SelectionConfig:
    """Forward stepwise search settings."""

    criterion: str = "bic"
    max_terms: int = 10
    direction: str = "forward"
    min_improvement: float = 0.0

    def __post_init__(self) -> None:
        if self.criterion not in ("aic", "bic"):
            raise ValueError(f"criterion must be 'aic' or 'bic', got {self.criterion!r}")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.direction != "forward":
            raise ValueError("only forward selection is supported")
        if self.min_improvement < 0:
            raise ValueError("min_improvement must be >= 0")


def _prepare(X, y, terms, names):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if terms is None:
        terms = range(X.shape[1])
    terms = tuple(sorted(int(t) for t in terms))
    if len(set(terms)) != len(terms):
        raise FitError("duplicate terms")
    if names is None:
        term_names = tuple(f"x{t}" for t in terms)
    else:
        term_names = tuple(str(names[t]) for t in terms)
    design = np.column_stack([np.ones(X.shape[0]), X[:, list(terms)]])
    return design, y, terms, term_names


def fit_gaussian(
    X: np.ndarray,
    y: np.ndarray,
    terms: Sequence[int] | None = None,
    names: Sequence[str] | None = None,
) -> GlmFit:
    """Ordinary least squares with t-based inference.

    SEs come from ``sigma2 * inv(Z'Z)`` with ``sigma2 = RSS / (n - p - 1)``;
    p-values are two-sided Student-t on ``n - p - 1`` df.  The reported
    log-likelihood uses the MLE variance ``RSS / n``.
    """
    Z, y, terms, term_names = _prepare(X, y, terms, names)
    n, q = Z.shape
    if n <= q:
        raise FitError(f"need more than {q} observations for {q - 1} terms, got {n}")
    if np.linalg.matrix_rank(Z) < q:
        raise FitError("design matrix is rank deficient")
    gram_inv = np.linalg.inv(Z.T @ Z)
    beta = gram_inv @ (Z.T @ y)
    resid = y - Z @ beta
    rss = float(resid @ resid)
    df = n - q
    sigma2 = rss / df
    se = np.sqrt(np.maximum(np.diag(gram_inv) * sigma2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    # 0/0 (zero coefficient on an exact fit) carries no evidence
    t = np.where(np.isnan(t), 0.0, t)
    p = floor_p(t_two_sided(t, df))
    sigma2_mle = max(rss / n, np.finfo(float).tiny)
    loglik = -0.5 * n * (math.log(2.0 * math.pi * sigma2_mle) + 1.0)
    return GlmFit(
        family=GAUSSIAN,
        terms=terms,
        term_names=term_names,
        intercept=float(beta[0]),
        coefficients=beta[1:],
        std_errors=se[1:],
        p_values=p[1:],
        log_likelihood=loglik,
        n_obs=n,
        converged=True,
    )


def _binomial_loglik(y, eta):
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_binomial(
    X: np.ndarray,
    y: np.ndarray,
    terms: Sequence[int] | None = None,
    names: Sequence[str] | None = None,
    max_iter: int = 25,
    tol: float = 1e-8,
) -> GlmFit:
    """Logistic regression by iteratively reweighted least squares.

    Newton steps are halved until the deviance does not increase, so the
    recorded deviance trace is monotone.  Iteration stops once the absolute
    deviance change falls below ``tol``.  The fit is flagged
    ``converged=False`` (never raised) when the cap is hit, a coefficient
    exceeds ``DIVERGENCE_BOUND`` or the data are separated.
    """
    Z, y, terms, term_names = _prepare(X, y, terms, names)
    if not np.all((y == 0) | (y == 1)):
        raise FitError("binomial outcome must be 0/1")
    ybar = y.mean()
    if ybar in (0.0, 1.0):
        raise FitError("binomial outcome contains a single class")
    n, q = Z.shape

    beta = np.zeros(q)
    beta[0] = math.log(ybar / (1.0 - ybar))
    eta = Z @ beta
    dev = -2.0 * _binomial_loglik(y, eta)
    trace = [dev]
    stopped = False
    for _ in range(max_iter):
        mu = expit(eta)
        w = mu * (1.0 - mu)
        score = Z.T @ (y - mu)
        info = (Z * w[:, None]).T @ Z
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, score, rcond=None)[0]
        scale = 1.0
        for _ in range(40):
            cand = beta + scale * step
            cand_eta = Z @ cand
            cand_dev = -2.0 * _binomial_loglik(y, cand_eta)
            if np.isfinite(cand_dev) and cand_dev <= dev:
                break
            scale *= 0.5
        else:
            # no descent direction left at machine precision
            stopped = True
            break
        beta, eta = cand, cand_eta
        change = dev - cand_dev
        dev = cand_dev
        trace.append(dev)
        if change < tol:
            stopped = True
            break

    if not np.isfinite(dev):
        raise FitError("non-finite likelihood")

    mu = expit(eta)
    w = mu * (1.0 - mu)
    info = (Z * w[:, None]).T @ Z
    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info)
    var = np.diag(cov)
    se = np.where((var > 0) & np.isfinite(var), np.sqrt(np.abs(var)), np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = beta / se
    z = np.where(np.isnan(z), 0.0, z)
    p = floor_p(normal_two_sided(z))

    separated = bool(np.max(np.abs(eta)) > SEPARATION_ETA)
    diverged = bool(np.max(np.abs(beta)) > DIVERGENCE_BOUND)
    return GlmFit(
        family=BINOMIAL,
        terms=terms,
        term_names=term_names,
        intercept=float(beta[0]),
        coefficients=beta[1:],
        std_errors=se[1:],
        p_values=p[1:],
        log_likelihood=-0.5 * dev,
        n_obs=n,
        converged=stopped and not separated and not diverged,
        deviance_trace=tuple(trace),
    )


def fit_glm(X, y, terms=None, family: str = BINOMIAL, names=None) -> GlmFit:
    if family == GAUSSIAN:
        return fit_gaussian(X, y, terms, names)
    if family == BINOMIAL:
        return fit_binomial(X, y, terms, names)
    raise ValueError(f"unsupported family {family!r}")


def information_criterion(fit: GlmFit, criterion: str = "bic") -> float:
    """AIC or BIC; the parameter count includes the intercept and, for the
    gaussian family, the dispersion."""
    if criterion == "aic":
        penalty = 2.0 * fit.n_params
    elif criterion == "bic":
        penalty = fit.n_params * math.log(fit.n_obs)
    else:
        raise ValueError(f"criterion must be 'aic' or 'bic', got {criterion!r}")
    return -2.0 * fit.log_likelihood + penalty


def stepwise_select(
    X: np.ndarray,
    y: np.ndarray,
    candidate_terms: Sequence[int],
    family: str = BINOMIAL,
    config: SelectionConfig | None = None,
    names: Sequence[str] | None = None,
) -> GlmFit:
    """Forward selection starting from the intercept-only model.

    Each step adds the candidate giving the lowest criterion (lowest column
    index on ties).  Search ends when no candidate improves the criterion by
    more than zero and at least ``min_improvement``, or at ``max_terms``.
    Candidates whose fit fails are skipped for that step.
    """
    config = config or SelectionConfig()
    candidates = sorted(set(int(c) for c in candidate_terms))
    if not candidates:
        raise ValueError("candidate_terms must be nonempty")
    selected: list[int] = []
    current = fit_glm(X, y, (), family, names)
    current_score = information_criterion(current, config.criterion)
    while len(selected) < config.max_terms:
        best = None
        best_score = math.inf
        for c in candidates:
            if c in selected:
                continue
            try:
                trial = fit_glm(X, y, selected + [c], family, names)
            except FitError:
                continue
            score = information_criterion(trial, config.criterion)
            if score < best_score:
                best, best_score = trial, score
                best_term = c
        if best is None:
            break
        improvement = current_score - best_score
        if improvement <= 0 or improvement < config.min_improvement:
            break
        selected.append(best_term)
        current, current_score = best, best_score
    return current
