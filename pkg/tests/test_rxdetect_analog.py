"""Unit tests for analog calibration and demodulation."""

import numpy as np
import pytest

from fndlink.errors import CalibrationError, PayloadError
from fndlink.physics import FndCluster, MagneticFieldMap
from fndlink.rxdetect import (
    AnalogResult,
    AnalogSettings,
    CalibrationCurve,
    JointCalibration,
    calibrate_analog,
    demod_analog,
    fm_range,
)
from fndlink.scene import FieldOfView, FrameRenderer, NoiseModel

SINE = np.sin(np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False))


def _renderer(spin, budget: float = 1e6) -> FrameRenderer:
    fov = FieldOfView(width=10.0, height=10.0, pixels_x=16, pixels_y=16)
    noise = NoiseModel()
    cluster = FndCluster(
        id=0,
        position=(5.0, 5.0),
        nv_axis=(0.0, 0.0, 1.0),
        brightness=budget / noise.exposure,
        spin_model=spin,
    )
    return FrameRenderer([cluster], MagneticFieldMap.zero(), fov, noise)


class TestCalibrationCurve:
    def test_interpolates_both_ways(self):
        curve = CalibrationCurve(kind="am", axis=np.array([0.0, 1.0, 2.0]), response=np.array([10.0, 8.0, 4.0]))
        assert curve(0.5) == pytest.approx(9.0)
        assert curve.inverse(6.0) == pytest.approx(1.5)
        assert not curve.increasing

    def test_inverse_clips_to_range(self):
        curve = CalibrationCurve(kind="fm", axis=np.array([0.0, 1.0]), response=np.array([1.0, 2.0]))
        assert curve.inverse(5.0) == pytest.approx(1.0)

    def test_non_monotone_rejected(self):
        with pytest.raises(CalibrationError):
            CalibrationCurve(kind="am", axis=np.array([0.0, 1.0, 2.0]), response=np.array([1.0, 3.0, 2.0]))

    def test_axis_must_increase(self):
        with pytest.raises(CalibrationError):
            CalibrationCurve(kind="am", axis=np.array([1.0, 0.0]), response=np.array([1.0, 2.0]))


class TestAnalogResult:
    def test_residuals_relative_to_full_scale(self):
        result = AnalogResult(expected=np.array([0.0, 0.5]), recovered=np.array([0.02, 0.5]))
        assert result.max_abs_residual == pytest.approx(0.01)
        assert result.rms_residual == pytest.approx(np.sqrt(0.0002) / 2.0)

    def test_empty(self):
        result = AnalogResult(expected=np.array([]), recovered=np.array([]))
        assert result.max_abs_residual == 0.0


class TestCalibrate:
    def test_am_response_falls_with_power(self, spin):
        curve = calibrate_analog("am", _renderer(spin))
        assert curve.axis[0] == pytest.approx(-12.0)
        assert curve.axis[-1] == pytest.approx(-2.0)
        assert not curve.increasing
        assert curve.axis.size == 201

    def test_fm_response_rises_off_resonance(self, spin):
        renderer = _renderer(spin)
        curve = calibrate_analog("fm", renderer)
        lo, hi = fm_range(renderer, AnalogSettings())
        assert (lo, hi) == pytest.approx((2871.5, 2879.0))
        assert curve.increasing

    def test_joint_surface(self, spin):
        settings = AnalogSettings(joint_grid_points=21)
        calibration = calibrate_analog("joint", _renderer(spin), settings)
        assert isinstance(calibration, JointCalibration)
        assert calibration.surface.shape == (21, 21)
        assert calibration.kind == "joint"
        assert not calibration.path.increasing

    def test_joint_path_steps_evenly_through_the_response(self, spin):
        renderer = _renderer(spin)
        calibration = calibrate_analog("joint", renderer)
        steps = np.diff(calibration.path.response)
        np.testing.assert_allclose(steps, steps.mean(), rtol=1e-2)
        lo, hi = fm_range(renderer, AnalogSettings())
        assert calibration.tone_at(-1.0) == pytest.approx((-12.0, hi))
        assert calibration.tone_at(1.0) == pytest.approx((-2.0, lo))
        powers, freqs = calibration.path_powers, calibration.path_frequencies
        assert np.all(np.diff(powers) > 0)
        assert np.all(np.diff(freqs) < 0)

    def test_unknown_kind(self, spin):
        with pytest.raises(CalibrationError):
            calibrate_analog("pm", _renderer(spin))

    def test_settings_ranges_must_increase(self):
        with pytest.raises(ValueError):
            AnalogSettings(am_power_range=(-2.0, -15.0))


class TestDemodulate:
    @pytest.mark.parametrize("kind", ["am", "fm", "joint"])
    def test_expectation_mode_is_interpolation_limited(self, spin, kind):
        renderer = _renderer(spin)
        calibration = calibrate_analog(kind, renderer)
        result = demod_analog(SINE, calibration, renderer, deterministic=True)
        assert result.expected.shape == SINE.shape
        assert result.max_abs_residual <= 0.005

    def test_noisy_high_budget(self, spin):
        renderer = _renderer(spin, budget=1e11)
        calibration = calibrate_analog("am", renderer)
        result = demod_analog(SINE, calibration, renderer, seed=9)
        assert result.max_abs_residual <= 0.004

    @pytest.mark.slow
    @pytest.mark.parametrize("kind,limit", [("am", 0.004), ("fm", 0.004), ("joint", 0.005)])
    def test_default_budget_residuals(self, spin, kind, limit):
        renderer = _renderer(spin, budget=1e10)
        calibration = calibrate_analog(kind, renderer)
        for seed in range(5):
            result = demod_analog(SINE, calibration, renderer, seed=seed)
            assert result.max_abs_residual <= limit, f"seed {seed}"

    def test_threads_do_not_change_samples(self, spin):
        renderer = _renderer(spin)
        calibration = calibrate_analog("joint", renderer, AnalogSettings(joint_grid_points=21))
        serial = demod_analog(SINE[:16], calibration, renderer, seed=4)
        pooled = demod_analog(SINE[:16], calibration, renderer, seed=4, threads=3)
        assert np.array_equal(serial.recovered, pooled.recovered)

    def test_samples_are_not_cached(self, spin):
        renderer = _renderer(spin)
        calibration = calibrate_analog("am", renderer)
        demod_analog(np.linspace(-1.0, 1.0, 500), calibration, renderer, deterministic=True)
        assert renderer.cached_signals == 0

    def test_noise_is_seeded(self, spin):
        renderer = _renderer(spin)
        calibration = calibrate_analog("fm", renderer)
        a = demod_analog(SINE[:8], calibration, renderer, seed=1)
        b = demod_analog(SINE[:8], calibration, renderer, seed=1)
        assert np.array_equal(a.recovered, b.recovered)

    def test_out_of_range_samples(self, spin):
        renderer = _renderer(spin)
        calibration = calibrate_analog("am", renderer)
        with pytest.raises(PayloadError):
            demod_analog([0.0, 1.5], calibration, renderer, deterministic=True)
