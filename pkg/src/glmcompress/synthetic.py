"""Planted-signal datasets for benchmarks and tests."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .data import BINARY, CONTINUOUS, Dataset


def planted_dataset(
    n_obs: int = 200,
    n_features: int = 50,
    informative: tuple[int, ...] = (0, 1, 2),
    effect: float = 1.5,
    seed: int = 0,
    kind: str = BINARY,
    noise: float = 1.0,
) -> Dataset:
    """Standard-normal features; the outcome depends on ``informative`` columns only.

    Binary outcomes are Bernoulli draws from ``expit(effect * sum(+-x_j))``
    with alternating signs; continuous outcomes add Gaussian noise.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n_obs, n_features))
    signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(len(informative))])
    eta = effect * (X[:, list(informative)] @ signs)
    if kind == BINARY:
        y = (rng.random(n_obs) < expit(eta)).astype(float)
    else:
        y = eta + noise * rng.standard_normal(n_obs)
        kind = CONTINUOUS
    names = tuple(f"f{j}" for j in range(n_features))
    return Dataset(X, y, names, kind, {"informative": list(informative)})
