import numpy as np
import pytest

from adasense.harness import (
    ConfigError,
    CurvePoint,
    ExperimentConfig,
    RiskCurve,
    curve_from_csv,
    curve_from_json,
    curve_to_csv,
    curve_to_json,
    find_crossing,
    phase_diagram,
    phase_to_csv,
    phase_to_json,
    run_experiment,
    scan_to_csv,
    scan_to_json,
    threshold_scan,
)


def small_config(**overrides):
    raw = {
        "strategy": "uniform",
        "n": 128,
        "s": 3,
        "m": 128.0,
        "amplitudes": [2.0, 5.0, 9.0],
        "trials": 24,
        "metric": "mean_sym_diff",
        "seed": 11,
    }
    raw.update(overrides)
    return ExperimentConfig.from_dict(raw)


class TestConfigValidation:
    def test_field_named_errors(self):
        base = small_config().to_dict()
        cases = [
            ("strategy", "bogus"),
            ("n", 0),
            ("s", 200),
            ("m", -1.0),
            ("amplitudes", []),
            ("trials", 1),
            ("metric", "nope"),
            ("epsilon", 0.0),
        ]
        for field_name, bad in cases:
            raw = dict(base)
            raw[field_name] = bad
            with pytest.raises(ConfigError) as err:
                ExperimentConfig.from_dict(raw)
            assert err.value.field == field_name

    def test_missing_field(self):
        raw = small_config().to_dict()
        del raw["trials"]
        with pytest.raises(ConfigError) as err:
            ExperimentConfig.from_dict(raw)
        assert err.value.field == "trials"

    def test_unknown_field(self):
        raw = small_config().to_dict()
        raw["bogus"] = 1
        with pytest.raises(ConfigError) as err:
            ExperimentConfig.from_dict(raw)
        assert err.value.field == "bogus"

    def test_detection_metric_requires_detector(self):
        raw = small_config().to_dict()
        raw["metric"] = "detection"
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)

    def test_sprt_rejects_zero_amplitude(self):
        raw = small_config(strategy="sprt").to_dict()
        raw["amplitudes"] = [0.0, 1.0]
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)


class TestDeterminism:
    def test_same_config_same_bytes(self):
        config = small_config()
        a = run_experiment(config)
        b = run_experiment(config)
        assert curve_to_csv(a) == curve_to_csv(b)
        assert curve_to_json(a) == curve_to_json(b)

    def test_thread_count_does_not_change_output(self, monkeypatch):
        config = small_config(trials=32)
        monkeypatch.setenv("ADASENSE_THREADS", "1")
        a = run_experiment(config)
        monkeypatch.setenv("ADASENSE_THREADS", "4")
        b = run_experiment(config)
        assert curve_to_csv(a) == curve_to_csv(b)

    def test_different_seed_changes_output(self):
        a = run_experiment(small_config(seed=1))
        b = run_experiment(small_config(seed=2))
        assert curve_to_csv(a) != curve_to_csv(b)


class TestRunExperiment:
    def test_zero_amplitude_detection_risk_is_one(self):
        config = ExperimentConfig.from_dict(
            {
                "strategy": "mds",
                "n": 64,
                "s": 4,
                "m": 64.0,
                "amplitudes": [0.0],
                "trials": 50,
                "metric": "detection",
                "seed": 3,
            }
        )
        curve = run_experiment(config)
        point = curve.points[0]
        # both hypotheses identical: errors sum to 1 in expectation
        assert abs(point.risk - 1.0) <= 3 * point.se

    def test_effectively_oracle_estimator_gives_zero_curve(self):
        # huge amplitude with a well-placed threshold recovers exactly
        config = small_config(
            amplitudes=[50.0], threshold=25.0, trials=30, n=256, m=256.0
        )
        curve = run_experiment(config)
        assert curve.points[0].risk == 0.0
        assert curve.points[0].se == 0.0

    def test_se_shrinks_with_trials(self):
        lo = run_experiment(small_config(amplitudes=[3.0], trials=40, seed=5))
        hi = run_experiment(small_config(amplitudes=[3.0], trials=160, seed=5))
        assert hi.points[0].se < lo.points[0].se
        ratio = lo.points[0].se / hi.points[0].se
        assert 1.2 <= ratio <= 3.5  # ~2 expected at 4x the trials

    def test_support_grid_mode(self):
        config = small_config(support_grid=4, trials=40)
        curve = run_experiment(config)
        assert len(curve.points) == 3

    def test_metadata_echoes_config(self):
        config = small_config()
        curve = run_experiment(config)
        assert curve.metadata["config"] == config.to_dict()
        assert "version" in curve.metadata


class TestFindCrossing:
    def test_identically_one_not_reached(self):
        curve = RiskCurve(
            tuple(CurvePoint(mu, 1.0, 0.0, 10) for mu in (1.0, 2.0, 3.0))
        )
        mu_star, _ = find_crossing(curve, 0.5)
        assert mu_star is None

    def test_step_function_located_within_grid_step(self):
        # synthetic step: risk 1 below mu=2, 0 at and above
        grid = np.linspace(0.0, 4.0, 41)
        curve = RiskCurve(
            tuple(
                CurvePoint(float(mu), 1.0 if mu < 2.0 else 0.0, 0.0, 10)
                for mu in grid
            )
        )
        mu_star, warning = find_crossing(curve, 0.5)
        assert abs(mu_star - 2.0) <= 0.1 + 1e-12
        assert warning is None

    def test_interpolation_between_brackets(self):
        curve = RiskCurve(
            (CurvePoint(1.0, 0.8, 0.0, 10), CurvePoint(2.0, 0.2, 0.0, 10))
        )
        mu_star, _ = find_crossing(curve, 0.5)
        assert mu_star == pytest.approx(1.5)

    def test_monotonicity_warning(self):
        curve = RiskCurve(
            (CurvePoint(1.0, 0.2, 0.0, 10), CurvePoint(2.0, 0.8, 0.0, 10))
        )
        _, warning = find_crossing(curve, 0.1)
        assert warning is not None


class TestScanAndPhase:
    def test_scan_on_sharp_uniform(self):
        config = small_config(
            amplitudes=[0.5, 2.0, 8.0, 16.0], threshold=4.0, trials=30,
            metric="exact_fail",
        )
        result = threshold_scan(config, 0.5)
        assert result.reached
        assert 0.5 <= result.mu_star <= 16.0

    def test_phase_monotone_configs(self):
        config = small_config(
            amplitudes=[50.0], threshold=25.0, trials=10, metric="exact_fail"
        )
        diagram = phase_diagram(config, [1, 2, 3], 0.5)
        # effectively an oracle: the first grid point crosses for every s
        assert all(scan.mu_star == 50.0 for scan in diagram.scans)
        text = phase_to_csv(diagram)
        assert text.count("\n") == 2 + 3  # header comment + columns + rows
        phase_to_json(diagram)

    def test_scan_serialization(self):
        config = small_config(trials=16)
        result = threshold_scan(config, 0.5)
        scan_to_csv(result)
        scan_to_json(result)

    def test_phase_crossing_nondecreasing_in_sparsity(self):
        # recovering more entries is never easier: the crossing amplitude
        # of the sequential-thresholding estimator grows with s
        config = ExperimentConfig.from_dict(
            {
                "strategy": "sds",
                "n": 1024,
                "s": 2,
                "m": 1024.0,
                "amplitudes": [3.0, 5.0, 7.0, 9.0, 11.0],
                "trials": 40,
                "metric": "mean_sym_diff",
                "seed": 19,
            }
        )
        # s grid stays inside the recovery guarantee's validity region
        # s+1 <= n/((log2 n)^2 - 3), i.e. s <= 9 at n=1024
        diagram = phase_diagram(config, [2, 4, 8], 0.5)
        stars = [scan.mu_star for scan in diagram.scans]
        assert all(star is not None for star in stars)
        # 2 s.e. slack is already inside the crossing rule; allow a small
        # interpolation wobble on top
        assert stars[0] <= stars[1] + 0.3 <= stars[2] + 0.6


class TestSerialization:
    def test_csv_round_trip(self):
        curve = run_experiment(small_config())
        back = curve_from_csv(curve_to_csv(curve))
        assert back.points == curve.points
        assert back.metadata == curve.metadata

    def test_json_round_trip(self):
        curve = run_experiment(small_config())
        back = curve_from_json(curve_to_json(curve))
        assert back.points == curve.points
        assert back.metadata == curve.metadata
