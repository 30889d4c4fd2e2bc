"""Synthetic building telemetry, windowing, normalization, CSV round trips."""

import numpy as np
import pytest

from gridadv.buildingload import (
    STEPS_PER_DAY,
    BuildingParams,
    Normalization,
    holdout_split,
    make_windows,
    read_csv,
    simulate_year,
    write_csv,
)
from gridadv.errors import ConfigError, ParseError

WEEK = BuildingParams(steps=7 * STEPS_PER_DAY)


@pytest.fixture(scope="module")
def week_sim():
    return simulate_year(WEEK, seed=17)


class TestSimulateYear:
    def test_shapes_and_feature_layout(self, week_sim):
        features, load = week_sim
        assert features.shape == (WEEK.steps, WEEK.n_features)
        assert load.shape == (WEEK.steps,)
        assert WEEK.feature_names()[:3] == ["temp_c", "solar", "occupancy"]
        assert WEEK.attackable_columns() == [2, 3, 4, 5, 6]

    def test_deterministic(self):
        a, la = simulate_year(WEEK, seed=3)
        b, lb = simulate_year(WEEK, seed=3)
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(la, lb)

    def test_occupancy_bounded_with_overnight_floor(self, week_sim):
        features, _ = week_sim
        occ = features[:, 2]
        assert occ.min() >= 0.0 and occ.max() <= 1.0
        # staffing never drops to zero: a 24/7 building
        assert occ.min() > 0.1

    def test_weekday_peak_exceeds_weekend_and_night(self, week_sim):
        features, _ = week_sim
        occ = features[:, 2]
        step = np.arange(WEEK.steps)
        hod = (step % STEPS_PER_DAY) * 24.0 / STEPS_PER_DAY
        weekend = (step // STEPS_PER_DAY % 7) >= 5
        daytime = (hod >= 10) & (hod < 16)
        night = hod < 5
        assert occ[daytime & ~weekend].mean() > occ[daytime & weekend].mean()
        assert occ[daytime & ~weekend].mean() > 2 * occ[night].mean()

    def test_load_tracks_occupancy(self, week_sim):
        features, load = week_sim
        corr = np.corrcoef(features[:, 2], load)[0, 1]
        assert corr > 0.9

    def test_solar_zero_at_night(self, week_sim):
        features, _ = week_sim
        hod = (np.arange(WEEK.steps) % STEPS_PER_DAY) * 24.0 / STEPS_PER_DAY
        assert np.all(features[hod < 5, 1] == 0.0)

    def test_setpoints_near_base(self, week_sim):
        features, _ = week_sim
        sp = features[:, 3 : 3 + WEEK.zones]
        margin = WEEK.zone_offset_max + WEEK.setpoint_jitter
        assert np.all(np.abs(sp - WEEK.setpoint_base) <= margin + 1e-12)

    def test_hour_encoding_on_unit_circle(self, week_sim):
        features, _ = week_sim
        radii = features[:, -2] ** 2 + features[:, -1] ** 2
        np.testing.assert_allclose(radii, np.ones(WEEK.steps), atol=1e-12)

    def test_business_factor_varies_between_days(self):
        params = BuildingParams(steps=14 * STEPS_PER_DAY)
        features, load = simulate_year(params, seed=23)
        hod = (np.arange(params.steps) % STEPS_PER_DAY) * 24.0 / STEPS_PER_DAY
        day = np.arange(params.steps) // STEPS_PER_DAY
        weekday_noon = (hod >= 11) & (hod < 14) & ((day % 7) < 5)
        day_means = [
            features[weekday_noon & (day == d), 2].mean()
            for d in range(14)
            if (d % 7) < 5
        ]
        assert np.std(day_means) > 0.02

    def test_validation(self):
        with pytest.raises(ConfigError):
            simulate_year(BuildingParams(steps=0), seed=0)
        with pytest.raises(ConfigError):
            simulate_year(BuildingParams(base_load=-1.0), seed=0)


class TestNormalization:
    def test_round_trip_bijection(self, week_sim):
        features, load = week_sim
        ds = make_windows(features, load, memory=6)
        normed = ds.norm.normalize(ds.windows)
        assert normed.min() >= -1e-12 and normed.max() <= 1.0 + 1e-12
        np.testing.assert_allclose(
            ds.norm.denormalize(normed), ds.windows, rtol=1e-12, atol=1e-9
        )
        y = ds.norm.normalize_target(ds.targets)
        np.testing.assert_allclose(
            ds.norm.denormalize_target(y), ds.targets, rtol=1e-12
        )

    def test_constant_feature_does_not_divide_by_zero(self):
        w = np.ones((4, 3, 2))
        w[:, :, 1] = np.arange(4)[:, None]
        norm = Normalization.fit(w, np.arange(4.0))
        out = norm.normalize(w)
        assert np.isfinite(out).all()

    def test_dict_round_trip(self, week_sim):
        features, load = week_sim
        ds = make_windows(features, load, memory=4)
        restored = Normalization.from_dict(ds.norm.to_dict())
        np.testing.assert_array_equal(restored.feat_min, ds.norm.feat_min)
        assert restored.target_max == ds.norm.target_max


class TestMakeWindows:
    def test_window_count_and_alignment(self):
        table = np.arange(20.0).reshape(10, 2)
        loads = np.arange(10.0) * 10
        ds = make_windows(table, loads, memory=3)
        assert len(ds) == 7
        np.testing.assert_array_equal(ds.windows[0], table[0:3])
        assert ds.targets[0] == loads[3]
        np.testing.assert_array_equal(ds.windows[-1], table[6:9])
        assert ds.targets[-1] == loads[9]

    def test_too_few_steps(self):
        with pytest.raises(ConfigError):
            make_windows(np.zeros((3, 2)), np.zeros(3), memory=3)


class TestHoldoutSplit:
    def test_partition_and_shared_normalization(self, week_sim):
        features, load = week_sim
        ds = make_windows(features, load, memory=6)
        train, test = holdout_split(ds, 0.2, seed=9)
        assert len(train) + len(test) == len(ds)
        assert len(test) == int(np.floor(0.2 * len(ds)))
        np.testing.assert_array_equal(train.norm.feat_min, test.norm.feat_min)

    def test_normalization_fitted_on_train_only(self, week_sim):
        features, load = week_sim
        ds = make_windows(features, load, memory=6)
        train, _ = holdout_split(ds, 0.2, seed=9)
        refit = Normalization.fit(train.windows, train.targets)
        np.testing.assert_array_equal(train.norm.feat_max, refit.feat_max)

    def test_fraction_bounds(self, week_sim):
        features, load = week_sim
        ds = make_windows(features, load, memory=6)
        with pytest.raises(ConfigError):
            holdout_split(ds, 0.0, seed=1)


class TestCsvRoundTrip:
    def test_bit_exact_round_trip(self, tmp_path):
        params = BuildingParams(steps=2 * STEPS_PER_DAY)
        features, load = simulate_year(params, seed=31)
        path = tmp_path / "bld.csv"
        write_csv(features, load, path)
        table, loads = read_csv(path)
        np.testing.assert_array_equal(table, features)
        np.testing.assert_array_equal(loads, load)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("nope\nstep,feat_0,load\n0,1.0,2.0\n")
        with pytest.raises(ParseError):
            read_csv(path)

    def test_field_count_error_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "# gridadv-bld v1 F=2\nstep,feat_0,feat_1,load\n0,1.0,2.0,3.0\n1,1.0\n"
        )
        with pytest.raises(ParseError) as exc:
            read_csv(path)
        assert ":4:" in str(exc.value)
