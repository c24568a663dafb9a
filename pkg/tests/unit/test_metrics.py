"""Unit tests for the generation metrics, rates and report tables."""

import numpy as np
import pandas as pd
import pytest

from compose_mcts.envs.rect import RectState, encode_action, step_rect
from compose_mcts.lib.exceptions import DataError
from compose_mcts.services.metrics import (
    COMPOSITION_COLUMNS,
    FeatureSet,
    RasterPCA,
    cached_features,
    frechet_distance,
    knn_radii,
    precision_recall,
    report,
    success_rate,
    validity_rate,
)

pytestmark = pytest.mark.unit


def line(*values: float) -> FeatureSet:
    return FeatureSet(np.array(values, dtype=np.float64)[:, None])


def solved_state(config) -> RectState:
    state = RectState.empty(config.pieces, config.region)
    for p in config.solution:
        state = step_rect(state, encode_action(p)).state
    return state


class TestFrechetDistance:
    def test_constant_sets_one_apart(self):
        a = FeatureSet(np.zeros((5, 2)))
        b = FeatureSet(np.tile([1.0, 0.0], (5, 1)))
        assert frechet_distance(a, b) == pytest.approx(1.0)

    @pytest.mark.parametrize("n, d", [(50, 3), (10, 64), (20, 64), (5, 8)])
    def test_identical_sets(self, n, d):
        # n <= d leaves the covariance rank deficient.
        values = np.random.default_rng(n * d).normal(size=(n, d))
        assert frechet_distance(FeatureSet(values), FeatureSet(values.copy())) == pytest.approx(0.0, abs=1e-8)

    def test_dimension_mismatch(self):
        with pytest.raises(DataError):
            frechet_distance(FeatureSet(np.zeros((3, 2))), FeatureSet(np.zeros((3, 3))))


class TestPrecisionRecall:
    def test_knn_radii(self):
        np.testing.assert_allclose(knn_radii(line(0, 1, 3), k=1), [1.0, 1.0, 2.0])

    def test_k_must_be_below_sample_count(self):
        with pytest.raises(DataError):
            knn_radii(line(0, 1, 3), k=3)

    def test_full_coverage(self):
        assert precision_recall(line(0, 1, 3), line(0.5, 3.5), k=1) == (1.0, 1.0)

    def test_outlier_lowers_precision(self):
        precision, recall = precision_recall(line(0, 1, 3), line(0.5, 10.0), k=1)
        assert precision == pytest.approx(0.5)
        assert recall == pytest.approx(2.0 / 3.0)


class TestRates:
    def test_solved_state_counts_as_success(self, rect_env, small_square_config):
        solved = solved_state(small_square_config)
        empty = rect_env.initial_state(small_square_config)
        assert success_rate(rect_env, [solved, empty]) == 0.5
        assert validity_rate(rect_env, [solved, empty]) == 1.0

    def test_empty_batch(self, rect_env):
        with pytest.raises(DataError):
            success_rate(rect_env, [])
        with pytest.raises(DataError):
            validity_rate(rect_env, [])


class TestFeatures:
    def test_pca_needs_fit(self):
        with pytest.raises(DataError):
            RasterPCA().transform(np.zeros((2, 4, 4)))

    def test_pca_dimension(self):
        rasters = np.random.default_rng(1).random((10, 4, 4)) > 0.5
        features = RasterPCA(dim=3).fit(rasters).transform(rasters)
        assert features.values.shape == (10, 3)
        assert features.extractor == "raster-pca"

    def test_cache_reuses_stored_features(self, tmp_path):
        source = np.arange(6.0)
        calls = []

        def compute():
            calls.append(1)
            return FeatureSet(source.reshape(3, 2), "raw")

        first = cached_features(tmp_path, "raw", source, compute)
        second = cached_features(tmp_path, "raw", source, compute)
        assert len(calls) == 1
        np.testing.assert_array_equal(first.values, second.values)


class TestReport:
    def test_files_and_rounding(self, tmp_path):
        rows = [{"Method": "mcts", "Easy": 0.125, "Hard": 0.375, "Average": 0.25, "Valid": 1.0}]
        frame = report(rows, COMPOSITION_COLUMNS, tmp_path, "composition")
        assert list(frame.columns) == COMPOSITION_COLUMNS
        assert frame.loc[0, "Easy"] == 0.12
        assert frame.loc[0, "Hard"] == 0.38
        loaded = pd.read_csv(tmp_path / "composition.csv")
        assert loaded.loc[0, "Method"] == "mcts"
        assert "| Method" in (tmp_path / "composition.md").read_text(encoding="utf-8")
