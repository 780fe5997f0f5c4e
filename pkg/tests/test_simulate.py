import io
import math

import numpy as np
import pytest

from scalewin import (
    ArgumentError,
    Constant,
    DailySchedule,
    ExponentialAffine,
    FormatError,
    HurstExponent,
    PathEnsemble,
    ResourceBudgetError,
    ScalingModel,
    SimConfig,
    TimeSeries,
    ensemble_from_binary,
    ensemble_from_csv,
    ensemble_to_binary,
    ensemble_to_csv,
    series_from_binary,
    series_from_csv,
    series_to_binary,
    series_to_csv,
    simulate_daily_pattern,
    simulate_ensemble,
    simulate_fbm,
    simulate_path,
)

H35 = HurstExponent(0.35)
EXP_MODEL = ScalingModel(H35, ExponentialAffine(convention="eq34"))
WIENER = ScalingModel(HurstExponent(0.5), Constant(1.0))


# ---------------------------------------------------------------------------
# determinism
# ---------------------------------------------------------------------------

def test_ensemble_is_deterministic_per_seed():
    cfg = SimConfig(seed=42)
    a = simulate_ensemble(EXP_MODEL, 200, [1.0, 10.0], cfg)
    b = simulate_ensemble(EXP_MODEL, 200, [1.0, 10.0], cfg)
    np.testing.assert_array_equal(a.values, b.values)
    c = simulate_ensemble(EXP_MODEL, 200, [1.0, 10.0], SimConfig(seed=43))
    assert not np.array_equal(a.values, c.values)


def test_path_and_fbm_are_deterministic_per_seed():
    a = simulate_path(EXP_MODEL, 100.0, 1.0, SimConfig(seed=1))
    b = simulate_path(EXP_MODEL, 100.0, 1.0, SimConfig(seed=1))
    np.testing.assert_array_equal(a.values, b.values)
    f1 = simulate_fbm(HurstExponent(0.7), 256, 1.0, 1.0, SimConfig(seed=9))
    f2 = simulate_fbm(HurstExponent(0.7), 256, 1.0, 1.0, SimConfig(seed=9))
    np.testing.assert_array_equal(f1.values, f2.values)


# ---------------------------------------------------------------------------
# distributional checks
# ---------------------------------------------------------------------------

def test_wiener_variance_grows_linearly():
    ens = simulate_ensemble(WIENER, 40_000, [1.0, 4.0, 16.0], SimConfig(seed=7))
    var = np.mean(ens.values**2, axis=0)
    for v, t in zip(var, [1.0, 4.0, 16.0]):
        # relative sampling error ~ sqrt(2/n) ~ 0.7%
        assert v == pytest.approx(t, rel=0.04)
    assert abs(np.mean(ens.values[:, -1])) < 5 * math.sqrt(16.0 / 40_000)


def test_scaling_model_variance_grows_as_power_law():
    # second moment of the double-exponential scaling density is 2,
    # so <x^2(t)> = 2 t^(2H)
    ens = simulate_ensemble(EXP_MODEL, 40_000, [10.0, 100.0], SimConfig(seed=3))
    for i, t in enumerate([10.0, 100.0]):
        m2 = np.mean(ens.values[:, i] ** 2)
        assert m2 == pytest.approx(2 * t ** 0.7, rel=0.05)


def test_increment_mean_square_identity():
    # z = x(t+T) - x(t) satisfies <z^2> = <x^2(t+T)> - <x^2(t)> - 2<x(t) z>
    # exactly, sample by sample
    ens = simulate_ensemble(EXP_MODEL, 500, [10.0, 20.0], SimConfig(seed=11))
    x1, x2 = ens.values[:, 0], ens.values[:, 1]
    z = x2 - x1
    lhs = np.mean(z**2)
    rhs = np.mean(x2**2) - np.mean(x1**2) - 2 * np.mean(x1 * z)
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_deterministic_drift_is_superimposed():
    base = simulate_ensemble(EXP_MODEL, 50, [1.0, 5.0, 10.0], SimConfig(seed=5))
    drifted_model = ScalingModel(H35, ExponentialAffine(convention="eq34"),
                                 drift_rate=lambda t: 0.25)
    drifted = simulate_ensemble(drifted_model, 50, [1.0, 5.0, 10.0], SimConfig(seed=5))
    want = np.broadcast_to(0.25 * np.array([1.0, 5.0, 10.0]), (50, 3))
    np.testing.assert_allclose(drifted.values - base.values, want, rtol=1e-9, atol=1e-12)


def test_fbm_increment_correlation_sign():
    # positively correlated increments for H > 1/2, negatively for H < 1/2
    def adjacent_corr(h_val, seed):
        s = simulate_fbm(HurstExponent(h_val), 2048, 1.0, 1.0, SimConfig(seed=seed))
        z = np.diff(np.concatenate([[0.0], s.values]))
        return float(np.corrcoef(z[:-1], z[1:])[0, 1])

    assert adjacent_corr(0.7, 2) > 0.2
    assert adjacent_corr(0.3, 2) < -0.1


def test_fbm_matches_exact_covariance():
    # pool many short samples and compare Cov(x(1), x(3)) with
    # (t^2H + s^2H - |t-s|^2H) / 2
    h = 0.7
    xs = []
    for seed in range(400):
        s = simulate_fbm(HurstExponent(h), 4, 1.0, 1.0, SimConfig(seed=seed))
        xs.append(s.values)
    xs = np.array(xs)
    want = 0.5 * (1.0 + 3.0 ** (2 * h) - 2.0 ** (2 * h))
    got = float(np.mean(xs[:, 0] * xs[:, 2]))
    sd = float(np.std(xs[:, 0] * xs[:, 2], ddof=1)) / math.sqrt(xs.shape[0])
    assert abs(got - want) < 4 * sd


# ---------------------------------------------------------------------------
# grids, validation, budgets
# ---------------------------------------------------------------------------

def test_path_grid_is_uniform_from_interval():
    s = simulate_path(WIENER, 10.0, 0.5, SimConfig(seed=0))
    np.testing.assert_allclose(s.timestamps, np.arange(1, 21) * 0.5)
    assert s.sample_interval == pytest.approx(0.5)


def test_sample_times_must_increase():
    with pytest.raises(ArgumentError):
        simulate_ensemble(WIENER, 10, [1.0, 1.0], SimConfig(seed=0))
    with pytest.raises(ArgumentError):
        simulate_ensemble(WIENER, 10, [5.0, 2.0], SimConfig(seed=0))


def test_budgets_are_enforced(monkeypatch):
    with pytest.raises(ResourceBudgetError):
        simulate_path(WIENER, 1e9, 1.0, SimConfig(seed=0))
    with pytest.raises(ResourceBudgetError):
        simulate_ensemble(WIENER, 10**7, np.arange(1.0, 1001.0), SimConfig(seed=0))
    monkeypatch.setenv("SCALEWIN_MAX_PATH_SAMPLES", "100")
    with pytest.raises(ResourceBudgetError):
        simulate_path(WIENER, 200.0, 1.0, SimConfig(seed=0))


def test_fbm_size_limits():
    with pytest.raises(ArgumentError):
        simulate_fbm(HurstExponent(0.7), 0, 1.0, 1.0, SimConfig(seed=0))
    with pytest.raises(ArgumentError):
        simulate_fbm(HurstExponent(0.7), 10_000, 1.0, 1.0, SimConfig(seed=0))


# ---------------------------------------------------------------------------
# daily schedules
# ---------------------------------------------------------------------------

def _two_regime_schedule():
    return DailySchedule(
        intervals=(
            (0.0, 0.5, HurstExponent(0.35), ExponentialAffine(convention="eq34")),
            (0.5, 1.0, HurstExponent(0.6), ExponentialAffine(convention="eq34")),
        ),
        t_day=1.0,
    )


def test_schedule_must_partition_the_day():
    with pytest.raises(ArgumentError):
        DailySchedule(
            intervals=((0.0, 0.4, HurstExponent(0.5), Constant(1.0)),
                       (0.5, 1.0, HurstExponent(0.5), Constant(1.0))),
            t_day=1.0,
        )


def test_daily_pattern_layout():
    s = simulate_daily_pattern(_two_regime_schedule(), 3, 0.25, SimConfig(seed=4))
    # 4 slots per day, 3 days; timestamps are day + slot
    assert s.values.size == 12
    np.testing.assert_allclose(s.timestamps[:4], [0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(s.timestamps[4:8], [1.25, 1.5, 1.75, 2.0])
    assert s.origin_tag == "daily-pattern"


def test_daily_pattern_days_are_independent_and_identically_seeded():
    a = simulate_daily_pattern(_two_regime_schedule(), 2, 0.25, SimConfig(seed=4))
    b = simulate_daily_pattern(_two_regime_schedule(), 2, 0.25, SimConfig(seed=4))
    np.testing.assert_array_equal(a.values, b.values)
    # two days differ (they are different realizations)
    assert not np.array_equal(a.values[:4], a.values[4:8])


def test_daily_pattern_second_moment_tracks_regime():
    # within each day the process restarts, and the late-day regime has a
    # different growth exponent; check the per-slot variance profile is
    # nonconstant across the day
    s = simulate_daily_pattern(_two_regime_schedule(), 400, 1 / 16, SimConfig(seed=8))
    x = s.values.reshape(400, 16)
    z = np.diff(np.concatenate([np.zeros((400, 1)), x], axis=1), axis=1)
    msf = np.mean(z**2, axis=0)
    assert msf.max() / msf.min() > 1.5


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_ensemble_csv_round_trip(tmp_path):
    ens = simulate_ensemble(EXP_MODEL, 20, [1.0, 2.0, 5.0], SimConfig(seed=6))
    p = tmp_path / "ens.csv"
    ensemble_to_csv(ens, p)
    back = ensemble_from_csv(p)
    np.testing.assert_array_equal(back.sample_times, ens.sample_times)
    np.testing.assert_array_equal(back.values, ens.values)


def test_ensemble_binary_round_trip(tmp_path):
    ens = simulate_ensemble(EXP_MODEL, 20, [1.0, 2.0], SimConfig(seed=6))
    p = tmp_path / "ens.bin"
    ensemble_to_binary(ens, p)
    back = ensemble_from_binary(p)
    np.testing.assert_array_equal(back.sample_times, ens.sample_times)
    np.testing.assert_array_equal(back.values, ens.values)


def test_series_round_trips(tmp_path):
    s = simulate_path(WIENER, 50.0, 1.0, SimConfig(seed=2))
    pc, pb = tmp_path / "s.csv", tmp_path / "s.bin"
    series_to_csv(s, pc)
    series_to_binary(s, pb)
    from_csv = series_from_csv(pc)
    from_bin = series_from_binary(pb)
    np.testing.assert_array_equal(from_csv.values, s.values)
    np.testing.assert_array_equal(from_bin.values, s.values)
    assert from_bin.origin_tag == s.origin_tag


def test_binary_readers_reject_wrong_magic(tmp_path):
    p = tmp_path / "junk.bin"
    p.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
    with pytest.raises(FormatError):
        ensemble_from_binary(p)
    with pytest.raises(FormatError):
        series_from_binary(p)


def test_time_series_rejects_nonuniform_interval_query():
    s = TimeSeries(timestamps=np.array([1.0, 2.0, 4.0]), values=np.zeros(3))
    with pytest.raises(ArgumentError):
        _ = s.sample_interval
