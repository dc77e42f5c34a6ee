import numpy as np
import pytest

from glmcompress.ensemble import Ensemble
from glmcompress.glm import BINOMIAL, GlmFit


def make_fit(terms, betas, pvals, names=None, intercept=0.0, family=BINOMIAL, n_obs=50):
    terms = tuple(terms)
    return GlmFit(
        family=family,
        terms=terms,
        term_names=tuple(names or (f"x{t}" for t in terms)),
        intercept=intercept,
        coefficients=np.asarray(betas, dtype=float),
        std_errors=np.ones(len(terms)),
        p_values=np.asarray(pvals, dtype=float),
        log_likelihood=-10.0,
        n_obs=n_obs,
    )


FIG2_NAMES = ("A", "B", "C")


@pytest.fixture
def fig2_models():
    """The two-model compressed ensemble shown in the worked example."""
    return (
        make_fit([0], [0.081], [0.0027], ["A"]),
        make_fit([1, 2], [0.4358, 0.1917], [0.9990, 0.9999], ["B", "C"]),
    )


@pytest.fixture
def fig2_ensemble(fig2_models):
    return Ensemble(fig2_models, FIG2_NAMES, BINOMIAL)


@pytest.fixture
def rng():
    return np.random.default_rng(20161209)
