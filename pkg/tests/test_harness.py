"""Tests for the simulation harness: link runs, sweeps, capacity, scan and audio."""

import json

import numpy as np
import pytest
from scipy.io import wavfile

from fndlink.errors import ConfigError
from fndlink.harness import (
    REPORT_NAME,
    analog_renderer,
    build_scene,
    draw_channel,
    load_payloads,
    point_config,
    reffree_link_ber,
    run_ber_sweep,
    run_capacity,
    run_demod_audio,
    run_odmr_scan,
    run_simulate,
    scheme_symbol_map,
    simulate_link,
)
from fndlink.image_utils import read_csv, read_pgm, write_pgm
from fndlink.modem import ImageMessage, bit_errors, hex_to_bits
from fndlink.rxdetect import UserAssignment, UserChannel

REFERENCE_SCHEMES = ["fsk-zfs", "ask-zfs", "fsk-low", "fsk-high", "joint-zfs"]


class TestChannel:
    def test_gains_are_prefix_stable(self):
        small = draw_channel(5, 2, 3)
        large = draw_channel(5, 2, 8)
        np.testing.assert_array_equal(small.gains_db, large.gains_db[:, :3])

    def test_user_offsets(self):
        flat = draw_channel(5, 2, 4, gain_sd_db=0.0, user_offsets_db=[-3.0, 1.0])
        assert flat.gains_db[:, 0].tolist() == [-3.0, 1.0]


class TestSimulateLink:
    @pytest.mark.parametrize("scheme", REFERENCE_SCHEMES)
    def test_noiseless_reference_schemes_are_error_free(self, make_config, scheme):
        config = make_config(scheme=scheme, deterministic=True)
        result = simulate_link(config, load_payloads(config))
        assert [bit_errors(t, r) for t, r in zip(result.tx, result.rx)] == [0, 0]
        assert result.slots.reference == len(result.bank.frames) * config.n_ref
        assert result.slots.calibration == 0

    def test_noiseless_reffree_link(self, make_config):
        config = make_config(scheme="fsk-reffree", deterministic=True)
        result = simulate_link(config, load_payloads(config))
        assert [bit_errors(t, r) for t, r in zip(result.tx, result.rx)] == [0, 0]
        assert result.slots.calibration == 4
        assert result.slots.reference == 0
        assert result.assignment.resonances == pytest.approx([2946.5, 2959.5], abs=0.5)

    def test_reffree_scene_holds_only_placed_clusters(self, make_config):
        config = make_config(scheme="fsk-reffree")
        scene = build_scene(config, scheme_symbol_map(config))
        assert [c.position for c in scene.clusters] == [(5.0, 10.0), (15.0, 10.0)]

    def test_single_user(self, make_config):
        config = make_config(n_users=1, deterministic=True)
        result = simulate_link(config, load_payloads(config))
        assert len(result.rx) == 1
        assert result.rx[0] == result.tx[0]
        assert result.slots.reference == 2 * config.n_ref

    def test_noisy_run_is_seeded(self, make_config):
        config = make_config(threads=2)
        a = simulate_link(config, load_payloads(config))
        b = simulate_link(config, load_payloads(config))
        assert [r.bits.tolist() for r in a.rx] == [r.bits.tolist() for r in b.rx]


class TestRunSimulate:
    @pytest.fixture
    def image_config(self, make_config, tmp_path, rng):
        images = []
        for user, shapes in enumerate([[(3, 4), (2, 5)], [(4, 4)]]):
            paths = []
            for index, shape in enumerate(shapes):
                image = ImageMessage(rng.integers(0, 256, size=shape, dtype=np.uint8))
                paths.append(str(write_pgm(image, tmp_path / "img" / f"u{user}_{index}.pgm")))
            images.append(paths)
        return make_config(deterministic=True, payload={"images": images})

    def test_images_survive_the_link(self, image_config):
        report = run_simulate(image_config)
        out = image_config.output_dir
        for user, paths in enumerate(image_config.payload.images):
            for index, path in enumerate(paths):
                assert read_pgm(out / "recovered" / f"user{user}_{index}.pgm") == read_pgm(path)
        assert report.aggregate_ber == 0.0
        assert report.per_user_bits == [(12 + 10) * 8, 16 * 8]

    def test_report_matches_bit_dumps(self, make_config):
        config = make_config(noise={"laser_scale": 0.01})
        report = run_simulate(config, config_source="{}")
        out = config.output_dir
        data = json.loads((out / REPORT_NAME).read_text(encoding="utf-8"))
        errors = []
        for user in range(config.n_users):
            tx = hex_to_bits((out / "bits" / f"user{user}_tx.hex").read_text(encoding="utf-8"))
            rx = hex_to_bits((out / "bits" / f"user{user}_rx.hex").read_text(encoding="utf-8"))
            errors.append(bit_errors(tx, rx))
        assert data["per_user_errors"] == errors
        assert data["aggregate_ber"] == pytest.approx(sum(errors) / sum(data["per_user_bits"]))
        assert data["config_source"] == "{}"
        assert (out / data["artifacts"]["reference_0-0"]).exists()

    def test_slot_timing(self, make_config):
        report = run_simulate(make_config(deterministic=True))
        assert report.timing.slot_ms == 50.0
        assert report.timing.preamble_airtime_ms == report.slots.reference * 50.0

    def test_repeated_runs_are_byte_identical(self, make_config):
        config = make_config()
        run_simulate(config)
        first = (config.output_dir / REPORT_NAME).read_bytes()
        run_simulate(config)
        assert (config.output_dir / REPORT_NAME).read_bytes() == first

    def test_reffree_writes_scan_artifacts(self, make_config):
        config = make_config(scheme="fsk-reffree", deterministic=True)
        report = run_simulate(config)
        assert {"scan", "fits"} <= set(report.artifacts)
        assert len(report.extra["assignment"]["channels"]) == 2


class TestBerSweep:
    def test_rows_in_value_seed_order(self, make_config):
        config = make_config(sweep={"parameter": "cluster_count", "values": [2, 4], "seeds": 5})
        report = run_ber_sweep(config)
        rows = read_csv(config.output_dir / report.artifacts["sweep"])
        assert len(rows) == 10
        assert [r["seed"] for r in rows[:5]] == ["7", "8", "9", "10", "11"]
        assert [r["param"] for r in rows[::5]] == ["2.0", "4.0"]
        assert list(rows[0]) == ["param", "seed", "ber_user_0", "ber_user_1", "ber_aggregate"]

    def test_parameter_flag_overrides_config(self, make_config):
        config = make_config(sweep={"values": [3, 5], "seeds": 5})
        report = run_ber_sweep(config, parameter="n_ref")
        assert report.extra["parameter"] == "n_ref"

    def test_needs_enough_seeds(self, make_config):
        with pytest.raises(ConfigError):
            run_ber_sweep(make_config(sweep={"seeds": 3}))

    def test_needs_two_points(self, make_config):
        with pytest.raises(ConfigError):
            run_ber_sweep(make_config(sweep={"values": [4]}))

    def test_point_config(self, make_config):
        cfg = point_config(make_config(threads=4), "noise", 7.5, 42)
        assert cfg.noise.read_noise_sd == 7.5
        assert cfg.master_seed == 42
        assert cfg.threads == 1
        assert point_config(make_config(), "laser_scale", 0.1, 1).noise.laser_scale == 0.1

    def test_unknown_parameter(self, make_config):
        with pytest.raises(ConfigError):
            point_config(make_config(), "exposure", 1.0, 1)


class TestCapacity:
    def test_flat_field_rejected(self, make_config):
        config = make_config(field_map={"uniform_field": [0.0, 0.0, 35.0]})
        with pytest.raises(ConfigError):
            run_capacity(config)

    def test_small_study(self, make_config):
        config = make_config(cluster_count=4, deterministic=True, capacity={"seeds": 2})
        report = run_capacity(config)
        assert len(report.extra["assigned_per_seed"]) == 2
        assert sum(report.extra["utilization_histogram"].values()) == 2
        rows = read_csv(config.output_dir / "capacity.csv")
        assert [r["seed"] for r in rows] == ["7", "8"]
        for row in rows:
            res = sorted(float(f) for f in row["resonances_mhz"].split())
            assert all(b - a >= 13.0 for a, b in zip(res, res[1:]))
        assert report.extra["link_ber_per_seed"] == [None, None]

    def test_link_check_follows_assignment(self, make_config):
        config = make_config(cluster_count=6, deterministic=True, capacity={"seeds": 2, "link_bits": 32})
        report = run_capacity(config)
        for assigned, link_ber in zip(report.extra["assigned_per_seed"], report.extra["link_ber_per_seed"]):
            assert (link_ber is None) == (assigned == 0)
            assert link_ber is None or 0.0 <= link_ber <= 0.1
        rows = read_csv(config.output_dir / "capacity.csv")
        assert list(rows[0])[-1] == "link_ber"

    def test_retuned_link_on_resonant_pair(self, make_config):
        config = make_config(scheme="fsk-reffree", deterministic=True, capacity={"link_bits": 64})
        scene = build_scene(config, scheme_symbol_map(config))
        radius = config.scan.roi_radius_factor * config.cluster.psf_sigma
        channels = tuple(
            UserChannel(user=u, cluster_id=c.id, resonance_mhz=f, centroid=c.position)
            for u, (c, f) in enumerate(zip(scene.clusters, [2946.5, 2959.5]))
        )
        assignment = UserAssignment(
            channels=channels, requested_users=2, total_clusters=2, min_separation=13.0, roi_radius=radius
        )
        assert reffree_link_ber(config, scene.renderer, assignment, config.master_seed) == 0.0


class TestOdmrScan:
    def test_scan_report(self, make_config):
        config = make_config(deterministic=True, scan={"step_mhz": 2.0})
        report = run_odmr_scan(config)
        assert report.command == "odmr-scan"
        assert report.extra["clusters"] == 6
        assert 0 < report.extra["rois"] <= 6
        rows = read_csv(config.output_dir / "scan.csv")
        assert len(rows) == 126 * report.extra["rois"]

    def test_threads_write_identical_scan(self, make_config, tmp_path):
        serial = make_config(scan={"step_mhz": 5.0}, output_dir=str(tmp_path / "serial"))
        pooled = make_config(scan={"step_mhz": 5.0}, output_dir=str(tmp_path / "pooled"), threads=3)
        run_odmr_scan(serial)
        run_odmr_scan(pooled)
        assert (tmp_path / "serial" / "scan.csv").read_bytes() == (tmp_path / "pooled" / "scan.csv").read_bytes()


class TestDemodAudio:
    @pytest.fixture
    def waveform(self, tmp_path):
        path = tmp_path / "tone.wav"
        t = np.arange(32) / 8000.0
        wavfile.write(path, 8000, (0.8 * 32767 * np.sin(2 * np.pi * 500 * t)).astype(np.int16))
        return path

    def test_am_and_fm(self, make_config, waveform):
        config = make_config(deterministic=True, analog={"modes": ["am", "fm"]})
        report = run_demod_audio(config, waveform)
        assert report.extra["samples"] == 32
        assert set(report.extra["modes"]) == {"am", "fm"}
        assert all(m["max_abs_residual"] <= 0.005 for m in report.extra["modes"].values())
        assert len(read_csv(config.output_dir / "residuals.csv")) == 64
        histogram = read_csv(config.output_dir / "residual_histogram.csv")
        assert sum(int(r["count"]) for r in histogram if r["mode"] == "am") == 32

    def test_max_samples(self, make_config, waveform):
        config = make_config(deterministic=True, analog={"modes": ["am"], "max_samples": 10})
        assert run_demod_audio(config, waveform).extra["samples"] == 10

    def test_dark_laser_rejected(self, make_config):
        with pytest.raises(ConfigError):
            analog_renderer(make_config(noise={"laser_scale": 0.0}))


@pytest.mark.slow
class TestAcceptance:
    """Full-scale runs at the default field of view and payload size."""

    def test_noiseless_loopback(self, make_config):
        config = make_config(fov={"width": 75.0, "height": 75.0, "pixels_x": 128, "pixels_y": 128},
                             cluster_count=20, n_ref=1, deterministic=True, payload={"random_bits": 14464})
        result = simulate_link(config, load_payloads(config))
        assert all(t == r for t, r in zip(result.tx, result.rx))

    @pytest.mark.parametrize(
        "scheme,limit,seeds",
        [("fsk-zfs", 0.01, 3), ("fsk-low", 0.01, 3), ("fsk-high", 0.01, 3), ("ask-zfs", 0.0, 10)],
    )
    def test_default_noise_ber(self, make_config, scheme, limit, seeds):
        errors = bits = 0
        for s in range(seeds):
            config = make_config(scheme=scheme, master_seed=100 + s, cluster_count=20, n_ref=400,
                                 payload={"random_bits": 2000})
            result = simulate_link(config, load_payloads(config))
            errors += sum(bit_errors(t, r) for t, r in zip(result.tx, result.rx))
            bits += sum(len(t) for t in result.tx)
        assert errors / bits <= limit

    def test_reffree_ber(self, make_config):
        errors = bits = 0
        for s in range(10):
            config = make_config(scheme="fsk-reffree", master_seed=200 + s, payload={"random_bits": 2000})
            result = simulate_link(config, load_payloads(config))
            errors += sum(bit_errors(t, r) for t, r in zip(result.tx, result.rx))
            bits += sum(len(t) for t in result.tx)
        assert errors / bits <= 0.001

    def test_more_light_lowers_ber(self, make_config):
        base = make_config(n_ref=50, payload={"random_bits": 1000})
        signal = build_scene(base).renderer.signal_counts_per_frame()

        def mean_ber(counts_per_frame: float) -> float:
            bers = []
            for s in range(5):
                cfg = point_config(base, "laser_scale", counts_per_frame / signal, base.master_seed + s)
                result = simulate_link(cfg, load_payloads(cfg))
                bers.append(sum(bit_errors(t, r) for t, r in zip(result.tx, result.rx)) / 2000)
            return float(np.mean(bers))

        dim, bright = mean_ber(100.0), mean_ber(1.0e5)
        assert dim >= 0.30
        assert bright <= 0.01

    def test_more_clusters_never_raise_median_ber(self, make_config):
        counts = [1, 2, 4, 8, 16]
        config = make_config(n_ref=20, payload={"random_bits": 500}, threads=4,
                             sweep={"parameter": "cluster_count", "values": counts, "seeds": 20})
        report = run_ber_sweep(config)
        rows = read_csv(config.output_dir / report.artifacts["sweep"])
        medians = [
            float(np.median([float(r["ber_aggregate"]) for r in rows if float(r["param"]) == n]))
            for n in counts
        ]
        assert all(b <= a for a, b in zip(medians, medians[1:])), medians

    def test_capacity_with_many_clusters(self, make_config):
        config = make_config(fov={"width": 75.0, "height": 75.0, "pixels_x": 128, "pixels_y": 128},
                             cluster_count=45, capacity={"seeds": 20}, threads=4)
        report = run_capacity(config)
        assert report.extra["mean_assigned"] >= 5
