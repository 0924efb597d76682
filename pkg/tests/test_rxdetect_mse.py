"""Unit tests for reference-bank minimum-distance detection."""

import itertools

import numpy as np
import pytest

from fndlink.errors import DetectionError, DimensionMismatchError
from fndlink.modem import Bitstream, build_schedule, preset_symbol_maps
from fndlink.rxdetect import (
    ReferenceBank,
    build_reference_bank,
    detect_stream,
    detect_symbols,
    mse_detect,
    mse_distances,
)
from fndlink.scene import FluorescenceFrame

TUPLES = [(0, 0), (0, 1), (1, 0), (1, 1)]


@pytest.fixture
def integer_bank(rng):
    """Bank of small integer-valued reference frames, one per FSK tuple."""
    frames = {t: [FluorescenceFrame(rng.integers(0, 50, size=(6, 5)))] for t in TUPLES}
    return build_reference_bank(frames, expected_tuples=TUPLES)


class TestReferenceBank:
    def test_keys_sorted(self, rng):
        frames = {t: FluorescenceFrame(rng.integers(0, 5, size=(2, 2))) for t in reversed(TUPLES)}
        assert ReferenceBank(frames).keys == TUPLES

    def test_build_averages_frames(self):
        frames = {(0,): [FluorescenceFrame(np.full((2, 2), 1.0)), FluorescenceFrame(np.full((2, 2), 3.0))]}
        bank = build_reference_bank(frames)
        assert np.allclose(bank[(0,)].counts, 2.0)

    def test_missing_tuple(self, rng):
        frames = {t: [FluorescenceFrame(np.ones((2, 2)))] for t in TUPLES[:3]}
        with pytest.raises(DetectionError):
            build_reference_bank(frames, expected_tuples=TUPLES)

    def test_tuple_without_frames(self):
        with pytest.raises(DetectionError):
            build_reference_bank({(0,): []})

    def test_shape_mismatch(self):
        frames = {(0,): [FluorescenceFrame(np.ones((2, 2)))], (1,): [FluorescenceFrame(np.ones((3, 2)))]}
        with pytest.raises(DimensionMismatchError):
            build_reference_bank(frames)

    def test_empty(self):
        with pytest.raises(DetectionError):
            ReferenceBank({})

    def test_completeness(self, integer_bank):
        assert integer_bank.is_complete(TUPLES)
        assert not integer_bank.is_complete(TUPLES[:2])


class TestMseDetect:
    def test_distances_match_brute_force(self, integer_bank, rng):
        frame = FluorescenceFrame(rng.integers(0, 50, size=(6, 5)))
        expected = []
        for key in TUPLES:
            ref = integer_bank[key].counts
            expected.append(sum((frame.counts[i, j] - ref[i, j]) ** 2 for i in range(6) for j in range(5)))
        assert mse_distances(frame, integer_bank).tolist() == expected

    def test_oracle_argmin(self, integer_bank, rng):
        for _ in range(20):
            frame = FluorescenceFrame(rng.integers(0, 50, size=(6, 5)))
            distances = {k: float(np.sum((frame.counts - integer_bank[k].counts) ** 2)) for k in TUPLES}
            best = min(TUPLES, key=lambda k: (distances[k], k))
            assert mse_detect(frame, integer_bank) == best

    @pytest.mark.slow
    def test_exhaustive_search_agrees_including_ties(self, rng):
        ties = 0
        for _ in range(1000):
            # tiny alphabets make equal distances common
            refs = {t: rng.integers(0, 2, size=(2, 2)) for t in TUPLES}
            frame = FluorescenceFrame(rng.integers(0, 3, size=(2, 2)))
            bank = ReferenceBank({t: FluorescenceFrame(r) for t, r in refs.items()})
            distances = {
                t: sum(int(frame.counts[i, j] - r[i, j]) ** 2 for i in range(2) for j in range(2))
                for t, r in refs.items()
            }
            best = min(distances.values())
            winners = sorted(t for t, d in distances.items() if d == best)
            ties += len(winners) > 1
            assert mse_detect(frame, bank) == winners[0]
        assert ties > 0

    def test_exact_reference_detected(self, integer_bank):
        for key in TUPLES:
            assert mse_detect(integer_bank[key], integer_bank) == key

    def test_tie_goes_to_smallest_tuple(self):
        same = FluorescenceFrame(np.ones((2, 2)))
        bank = ReferenceBank({(1, 1): same, (0, 1): same, (1, 0): FluorescenceFrame(np.zeros((2, 2)))})
        assert mse_detect(FluorescenceFrame(np.ones((2, 2))), bank) == (0, 1)

    def test_frame_shape_mismatch(self, integer_bank):
        with pytest.raises(DimensionMismatchError):
            mse_detect(FluorescenceFrame(np.ones((5, 6))), integer_bank)


class TestDetectStream:
    def test_threads_do_not_change_result(self, integer_bank, rng):
        frames = [FluorescenceFrame(rng.integers(0, 50, size=(6, 5))) for _ in range(600)]
        single = detect_symbols(frames, integer_bank, threads=1)
        pooled = detect_symbols(iter(frames), integer_bank, threads=3)
        assert single.shape == (600, 2)
        assert np.array_equal(single, pooled)

    def test_recovers_scheduled_bits(self, integer_bank):
        tx = [Bitstream(np.array([1, 0, 1, 1, 0], dtype=np.uint8)), Bitstream(np.array([0, 0, 1], dtype=np.uint8))]
        layout = build_schedule(tx, preset_symbol_maps("fsk-zfs"), n_ref=1)
        frames = (integer_bank[t] for t in layout.data_slots())
        assert detect_stream(frames, integer_bank, layout) == tx

    def test_incomplete_bank(self, rng):
        bank = ReferenceBank({t: FluorescenceFrame(np.ones((2, 2)) * i) for i, t in enumerate(TUPLES[:3])})
        tx = [Bitstream(np.array([1], dtype=np.uint8))] * 2
        layout = build_schedule(tx, preset_symbol_maps("fsk-zfs"), n_ref=1)
        with pytest.raises(DetectionError):
            detect_stream([], bank, layout)

    def test_joint_bank_size(self, rng):
        tuples = list(itertools.product(range(4), repeat=2))
        frames = {t: [FluorescenceFrame(rng.integers(0, 9, size=(3, 3)))] for t in tuples}
        bank = build_reference_bank(frames, expected_tuples=tuples)
        assert len(bank) == 16
