import json
import math

import numpy as np
import pytest

from glmcompress.data import Dataset
from glmcompress.ensemble import (
    BagConfig,
    Ensemble,
    LabeledMatrix,
    build_coefficient_matrix,
    build_significance_matrix,
    fit_ensemble,
)
from glmcompress.glm import SelectionConfig
from glmcompress.synthetic import planted_dataset

from conftest import make_fit


class TestMatrices:
    def test_fig2_coefficients(self, fig2_ensemble):
        B = build_coefficient_matrix(fig2_ensemble)
        np.testing.assert_array_equal(B.values, [[0.081, 0, 0], [0, 0.4358, 0.1917]])
        assert B.col_labels == ("A", "B", "C")

    def test_fig2_significance(self, fig2_ensemble):
        S = build_significance_matrix(fig2_ensemble).values
        assert S[0, 0] == pytest.approx(2.5686, abs=1e-4)
        assert S[1, 1] == pytest.approx(0.000434, abs=1e-6)
        assert S[1, 2] == pytest.approx(4.34e-5, rel=1e-3)
        for i, j in [(0, 1), (0, 2), (1, 0)]:
            assert S[i, j] == 0.0
            assert math.copysign(1, S[i, j]) == 1

    def test_p_equal_one_gives_zero(self):
        ens = Ensemble((make_fit([0], [0.1], [1.0]),), ("a",), "binomial")
        assert build_significance_matrix(ens).values[0, 0] == 0.0

    def test_floor(self):
        ens = Ensemble((make_fit([0], [9.0], [0.0]),), ("a",), "binomial")
        assert build_significance_matrix(ens).values[0, 0] == pytest.approx(300.0)

    def test_single_model_row(self):
        fit = make_fit([0, 1, 2], [0.5, -1.0, 2.0], [0.1, 0.2, 0.3])
        B = build_coefficient_matrix(Ensemble((fit,), ("a", "b", "c"), "binomial"))
        np.testing.assert_array_equal(B.values[0], fit.coefficients)

    def test_csv_round_trip_bitwise(self, fig2_ensemble):
        for M in (build_coefficient_matrix(fig2_ensemble), build_significance_matrix(fig2_ensemble)):
            again = LabeledMatrix.from_csv(M.to_csv("seed=1"))
            assert again.values.tobytes() == M.values.tobytes()
            assert again.col_labels == M.col_labels
            assert again.row_labels == M.row_labels

    def test_json_round_trip_bitwise(self, fig2_ensemble):
        text = json.dumps(fig2_ensemble.to_dict())
        again = Ensemble.from_dict(json.loads(text))
        assert (
            build_coefficient_matrix(again).values.tobytes()
            == build_coefficient_matrix(fig2_ensemble).values.tobytes()
        )
        assert json.dumps(again.to_dict()) == text

    def test_mixed_family_rejected(self):
        with pytest.raises(ValueError):
            Ensemble(
                (make_fit([0], [1], [0.1]), make_fit([0], [1], [0.1], family="gaussian")),
                ("a",),
                "binomial",
            )


@pytest.fixture(scope="module")
def small_data():
    return planted_dataset(n_obs=120, n_features=12, effect=1.5, seed=4)


class TestFitEnsemble:
    def test_singleton(self, small_data):
        ens = fit_ensemble(small_data, BagConfig(n_bags=1, seed=2))
        assert ens.d == 1
        assert ens.term_union == ens.models[0].terms

    def test_deterministic(self, small_data):
        cfg = BagConfig(n_bags=15, seed=11)
        a = json.dumps(fit_ensemble(small_data, cfg).to_dict())
        b = json.dumps(fit_ensemble(small_data, cfg).to_dict())
        assert a == b

    def test_thread_invariance(self, small_data):
        cfg = BagConfig(n_bags=15, seed=12)
        a = json.dumps(fit_ensemble(small_data, cfg, threads=1).to_dict())
        b = json.dumps(fit_ensemble(small_data, cfg, threads=8).to_dict())
        assert a == b

    def test_bag_streams_independent_of_count(self, small_data):
        # bag i depends only on (seed, i)
        few = fit_ensemble(small_data, BagConfig(n_bags=3, seed=5))
        many = fit_ensemble(small_data, BagConfig(n_bags=6, seed=5))
        for a, b in zip(few.models, many.models):
            assert a.to_dict() == b.to_dict()

    def test_planted_signal_frequency(self):
        ds = planted_dataset(n_obs=200, n_features=20, effect=1.5, seed=8)
        ens = fit_ensemble(ds, BagConfig(n_bags=100, seed=1))
        counts = ens.term_counts()
        top3 = sorted(counts, key=lambda t: (-counts[t], t))[:3]
        assert sorted(top3) == [0, 1, 2]

    def test_matrices_share_presence_pattern(self, small_data):
        ens = fit_ensemble(small_data, BagConfig(n_bags=20, seed=3))
        B = build_coefficient_matrix(ens).values
        S = build_significance_matrix(ens).values
        cols = {t: j for j, t in enumerate(ens.term_union)}
        present = np.zeros_like(B, dtype=bool)
        for i, m in enumerate(ens.models):
            for t in m.terms:
                present[i, cols[t]] = True
        assert np.all((B != 0) <= present)
        assert np.all((S > 0) <= present)
        assert np.all(S[~present] == 0) and np.all(B[~present] == 0)
        assert np.all(present.any(axis=0))
        assert np.all((S >= 0) & (S <= 300))

    def test_union_bound(self, small_data):
        cfg = BagConfig(n_bags=10, seed=3, selection=SelectionConfig(max_terms=2))
        ens = fit_ensemble(small_data, cfg)
        assert len(ens.term_union) <= 10 * 2
        assert all(len(m.terms) <= 2 for m in ens.models)

    def test_too_many_features_per_bag(self, small_data):
        with pytest.raises(ValueError):
            fit_ensemble(small_data, BagConfig(n_bags=1, features_per_bag=99))

    def test_gaussian_family(self):
        ds = planted_dataset(n_obs=80, n_features=9, seed=3, kind="continuous")
        ens = fit_ensemble(ds, BagConfig(n_bags=5, seed=1))
        assert ens.family == "gaussian"

    def test_bootstrap_class_failure(self):
        # half of all size-2 bootstraps are single-class and must be redrawn
        ds = Dataset(np.array([[0.0], [1.0]]), [0, 1], ("a",))
        ens = fit_ensemble(ds, BagConfig(n_bags=3, seed=0))
        assert ens.d == 3

    def test_defaults(self):
        assert BagConfig().resolved(50) == (8, 8)
        assert BagConfig().resolved(2000) == (45, 30)
