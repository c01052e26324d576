import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from scipy import stats

from conftest import make_series
from extremes.detection import extreme_detection_scores, scores_from_counts
from extremes.indices import extreme_indices, longest_run
from extremes.random_inputs import (
    random_series,
    spatial_random_values,
    temporal_random_values,
)
from extremes.robustness import RAW_INPUT, REAL, robustness_report, write_robustness
from extremes.skew_normal import (
    SPATIAL,
    TEMPORAL,
    SkewNoiseConfig,
    rescale_to_moments,
    skew_normal_moments,
    skew_normal_sample,
)
from maunet.models import MaunetLightModel
from training.config import TrainConfig
from training.trainer import train
from utils.exceptions import ShapeError
from utils.helper import read_csv


def one_cell(values, years=None):
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if years is None:
        years = [2000] * n
    days = np.array([[y, 152 + k] for k, y in enumerate(years)])
    return make_series(values.reshape(n, 1, 1), days=days)


def brute_cdd(values, dry=1.0):
    best = run = 0
    for v in values:
        run = run + 1 if v < dry else 0
        best = max(best, run)
    return best


class TestIndices:
    def test_hand_case(self):
        indices = extreme_indices(one_cell([0.0, 0.5, 3.0, 0.0, 0.0, 0.0, 2.0]))
        assert indices.cdd_map[0, 0] == 3
        assert indices.r20_map[0, 0] == 0
        assert indices.rx1day_map[0, 0] == 3.0

    def test_heavy_threshold_is_strict(self):
        indices = extreme_indices(one_cell([20.0, 20.5, 45.0, 0.0]))
        assert indices.r20_map[0, 0] == 2
        assert indices.rx1day_map[0, 0] == 45.0

    def test_years_are_averaged(self):
        values = [0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 30.0]
        years = [2000] * 4 + [2001] * 4
        indices = extreme_indices(one_cell(values, years))
        assert indices.n_years == 2
        # 2000: run of 2 (the trailing dry day does not continue into 2001); 2001: run of 3
        assert indices.cdd_map[0, 0] == pytest.approx(2.5)
        assert indices.r20_map[0, 0] == pytest.approx(0.5)
        assert indices.rx1day_map[0, 0] == pytest.approx(17.5)

    def test_masked_cells_are_nan(self, rain_series, disk_mask):
        indices = extreme_indices(rain_series)
        for values in indices.maps().values():
            assert np.all(np.isnan(values[~disk_mask]))
            assert np.all(np.isfinite(values[disk_mask]))
        assert set(indices.spatial_means()) == {"cdd", "r20mm", "rx1day"}

    def test_empty_series(self):
        with pytest.raises(ShapeError):
            extreme_indices(make_series(np.zeros((0, 2, 2))))

    def test_longest_run_vectorized(self):
        flags = np.array([[1, 0], [1, 1], [0, 1], [1, 1]], dtype=bool)
        np.testing.assert_array_equal(longest_run(flags), [2, 3])

    @hsettings(max_examples=1000, deadline=None)
    @given(st.lists(
        st.lists(st.sampled_from([0.0, 0.3, 0.99, 1.0, 5.0, 20.0, 20.01, 80.0]), min_size=1, max_size=30),
        min_size=1, max_size=4,
    ))
    def test_matches_brute_force(self, seasons):
        values = [v for season in seasons for v in season]
        years = [2000 + k for k, season in enumerate(seasons) for _ in season]
        indices = extreme_indices(one_cell(values, years))
        assert indices.n_years == len(seasons)
        assert indices.cdd_map[0, 0] == pytest.approx(np.mean([brute_cdd(s) for s in seasons]))
        assert indices.r20_map[0, 0] == pytest.approx(np.mean([sum(v > 20.0 for v in s) for s in seasons]))
        assert indices.rx1day_map[0, 0] == pytest.approx(np.mean([max(s) for s in seasons]), rel=1e-6)


class TestDetection:
    def test_scores_from_counts(self):
        scores = scores_from_counts(tp=2, fp=1, fn=1, tn=6)
        assert scores.f1 == pytest.approx(0.6667, abs=1e-4)
        assert scores.accuracy == pytest.approx(0.8)

    def test_no_observed_extremes(self):
        scores = scores_from_counts(tp=0, fp=2, fn=0, tn=8)
        assert scores.f1 is None
        assert scores.accuracy == pytest.approx(0.8)
        with pytest.raises(ValueError):
            scores_from_counts(0, 0, 0, 0)

    def test_threshold_is_inclusive(self):
        obs = one_cell([20.0, 5.0, 30.0, 0.0])
        pred = one_cell([25.0, 21.0, 10.0, 0.0])
        scores = extreme_detection_scores(pred, obs)
        assert (scores.tp, scores.fp, scores.fn, scores.tn) == (1, 1, 1, 1)


class TestSkewNormal:
    @pytest.mark.parametrize("a", [-3.0, 0.0, 1.0, 5.0])
    def test_moments_match_scipy(self, a):
        mean, var, skew = stats.skewnorm.stats(a, moments="mvs")
        assert skew_normal_moments(a) == pytest.approx((float(mean), float(var), float(skew)), abs=1e-12)

    def test_sample_moments(self):
        draws = skew_normal_sample(5.0, np.random.default_rng(3), size=200_000)
        mean, var, skew = skew_normal_moments(5.0)
        assert draws.mean() == pytest.approx(mean, abs=0.01)
        assert draws.var() == pytest.approx(var, abs=0.01)
        assert stats.skew(draws) == pytest.approx(skew, abs=0.05)

    def test_rescale_constant_sample(self):
        out = rescale_to_moments(np.ones((5, 2)), np.array([3.0, 4.0]), np.array([1.0, 0.0]))
        np.testing.assert_array_equal(out, np.tile([3.0, 4.0], (5, 1)))

    def test_shape_must_be_finite(self):
        with pytest.raises(ValueError):
            SkewNoiseConfig(shape=float("inf"))


class TestRandomInputs:
    def test_temporal_moments(self, rain_series):
        values = temporal_random_values(rain_series, SkewNoiseConfig(seed=4))
        ref = rain_series.valid_values()
        np.testing.assert_allclose(values.mean(axis=0), ref.mean(axis=0), atol=1e-9)
        np.testing.assert_allclose(values.std(axis=0), ref.std(axis=0), atol=1e-9)

    def test_spatial_moments(self, rain_series):
        values = spatial_random_values(rain_series, SkewNoiseConfig(mode=SPATIAL, seed=4))
        ref = rain_series.valid_values()
        np.testing.assert_allclose(values.mean(axis=1), ref.mean(axis=1), atol=1e-9)
        np.testing.assert_allclose(values.std(axis=1), ref.std(axis=1), atol=1e-9)

    @pytest.mark.parametrize("mode", [TEMPORAL, SPATIAL])
    def test_series_deterministic_clipped_masked(self, rain_series, disk_mask, mode):
        cfg = SkewNoiseConfig(mode=mode, seed=9)
        a, b = random_series(rain_series, cfg), random_series(rain_series, cfg)
        assert a.data.tobytes() == b.data.tobytes()
        assert a.data.min() >= 0.0
        assert np.all(a.data[:, ~disk_mask] == 0.0)
        np.testing.assert_array_equal(a.days, rain_series.days)

    def test_seed_changes_draws(self, rain_series):
        a = random_series(rain_series, SkewNoiseConfig(seed=1))
        b = random_series(rain_series, SkewNoiseConfig(seed=2))
        assert a.data.tobytes() != b.data.tobytes()


class TestRobustness:
    def test_report_rows(self, rain_series, tmp_path):
        trained = train(MaunetLightModel(seed=0), rain_series, rain_series,
                        TrainConfig(batch_size=4, max_epochs=1, seed=1))
        randoms = {
            TEMPORAL: random_series(rain_series, SkewNoiseConfig(mode=TEMPORAL, seed=1)),
            SPATIAL: random_series(rain_series, SkewNoiseConfig(mode=SPATIAL, seed=1)),
        }
        report = robustness_report(trained, rain_series, randoms, rain_series)
        assert [kind for kind, _ in report.rows] == [RAW_INPUT, REAL, TEMPORAL, SPATIAL]
        assert report.correlation(RAW_INPUT) == pytest.approx(1.0)
        assert report.holds == all(report.correlation(k) < report.correlation(REAL) for k in randoms)

        rows = read_csv(write_robustness(report, str(tmp_path / "robustness.csv")))
        assert [row["input_kind"] for row in rows] == [RAW_INPUT, REAL, TEMPORAL, SPATIAL]

    def test_misaligned_random_input(self, rain_series):
        trained = train(MaunetLightModel(seed=0), rain_series, rain_series,
                        TrainConfig(batch_size=4, max_epochs=1, seed=1))
        short = rain_series.select(slice(0, 10))
        with pytest.raises(ShapeError):
            robustness_report(trained, rain_series, {TEMPORAL: short}, rain_series)
