"""Unit tests for user-to-cluster assignment."""

import pytest
from pydantic import ValidationError

from fndlink.errors import AssignmentError, CalibrationError
from fndlink.rxdetect import LorentzianFit, LorentzianPeak, UserAssignment, UserChannel, assign_users


def _fit(upper: float, contrast: float = 0.02, lower: float = 2800.0, converged: bool = True) -> LorentzianFit:
    return LorentzianFit(
        baseline=1000.0,
        peaks=(
            LorentzianPeak(center=lower, fwhm=10.0, contrast=contrast),
            LorentzianPeak(center=upper, fwhm=10.0, contrast=contrast),
        ),
        residual_norm=0.0,
        converged=converged,
    )


class TestGreedyAssignment:
    def test_highest_contrast_first(self):
        fits = {0: _fit(2940.0, 0.01), 1: _fit(2945.0, 0.03), 2: _fit(2970.0, 0.02)}
        assignment = assign_users(fits, 2, 10.0)
        assert [c.cluster_id for c in assignment.channels] == [1, 2]
        assert assignment.resonances == [2945.0, 2970.0]
        assert not assignment.partial

    def test_separation_holds(self):
        fits = {i: _fit(2900.0 + 4.0 * i, 0.01 + 0.001 * i) for i in range(20)}
        assignment = assign_users(fits, 20, 13.0)
        res = sorted(assignment.resonances)
        assert all(b - a >= 13.0 for a, b in zip(res, res[1:]))
        assert assignment.partial
        assert assignment.utilization == pytest.approx(assignment.n_assigned / 20)

    def test_merged_branches_excluded(self):
        fits = {0: _fit(2875.0, lower=2868.0), 1: _fit(2950.0)}
        assignment = assign_users(fits, 2, 10.0)
        assert [c.cluster_id for c in assignment.channels] == [1]
        assert assignment.partial

    def test_unconverged_fits_excluded(self):
        assignment = assign_users({0: _fit(2950.0, converged=False)}, 1, 10.0)
        assert assignment.n_assigned == 0

    def test_flat_fits_excluded(self):
        assignment = assign_users({0: _fit(2950.0, contrast=1e-5)}, 1, 10.0)
        assert assignment.n_assigned == 0

    def test_overlapping_rois_excluded(self):
        fits = {0: _fit(2940.0), 1: _fit(2960.0), 2: _fit(2980.0)}
        centroids = {0: (10.0, 10.0), 1: (12.0, 10.0), 2: (40.0, 40.0)}
        assignment = assign_users(fits, 3, 10.0, centroids=centroids, roi_radius=2.0)
        assert [c.cluster_id for c in assignment.channels] == [2]
        assert assignment.channels[0].centroid == (40.0, 40.0)

    def test_no_clusters(self):
        assignment = assign_users({}, 2, 10.0)
        assert assignment.utilization is None
        assert assignment.partial

    def test_invalid_separation(self):
        with pytest.raises(AssignmentError):
            assign_users({}, 1, 0.0)


class TestTargetedAssignment:
    def test_nearest_resonance_per_user(self):
        fits = {0: _fit(2959.0, 0.03), 1: _fit(2947.0, 0.01), 2: _fit(2990.0, 0.05)}
        assignment = assign_users(fits, 2, 10.0, targets=[2946.5, 2959.5])
        assert [c.cluster_id for c in assignment.channels] == [1, 0]
        assert [c.user for c in assignment.channels] == [0, 1]

    def test_target_out_of_tolerance(self):
        assignment = assign_users({0: _fit(2950.0)}, 1, 10.0, targets=[2970.0])
        assert assignment.partial

    def test_target_count_must_match(self):
        with pytest.raises(AssignmentError):
            assign_users({}, 2, 10.0, targets=[2946.5])


class TestUserAssignment:
    def test_separation_validated(self):
        channels = (
            UserChannel(user=0, cluster_id=0, resonance_mhz=2950.0),
            UserChannel(user=1, cluster_id=1, resonance_mhz=2955.0),
        )
        with pytest.raises(ValidationError):
            UserAssignment(channels=channels, requested_users=2, total_clusters=2, min_separation=10.0)

    def test_with_thresholds(self):
        channels = (UserChannel(user=0, cluster_id=3, resonance_mhz=2950.0),)
        assignment = UserAssignment(channels=channels, requested_users=1, total_clusters=4, min_separation=10.0)
        assert assignment.with_thresholds([123.0]).channels[0].threshold == 123.0
        with pytest.raises(CalibrationError):
            assignment.with_thresholds([1.0, 2.0])
