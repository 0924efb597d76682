"""
Binding users to spectrally separated FND clusters.
"""

from typing import Mapping, Optional, Sequence

from fndlink.errors import AssignmentError
from fndlink.logger import get_logger

from .models import LorentzianFit, UserAssignment, UserChannel, Vec2
from .odmr_scan import overlapping_rois

logger = get_logger(__name__)

DEFAULT_MIN_CONTRAST = 1e-3


def _eligible(
    fits: Mapping[int, LorentzianFit],
    min_separation: float,
    min_contrast: float,
    excluded: set[int],
) -> list[tuple[int, LorentzianFit]]:
    out = []
    for cluster_id, fit in fits.items():
        if cluster_id in excluded or not fit.converged or not fit.peaks:
            continue
        if fit.upper.contrast < min_contrast:
            continue
        split = fit.branch_separation
        # merged Zeeman branches cannot carry a distinct resonance
        if split is not None and split < min_separation:
            continue
        out.append((cluster_id, fit))
    return out


def assign_users(
    fits: Mapping[int, LorentzianFit],
    n_users: int,
    min_separation: float,
    *,
    centroids: Optional[Mapping[int, Vec2]] = None,
    roi_radius: Optional[float] = None,
    targets: Optional[Sequence[float]] = None,
    target_tolerance: Optional[float] = None,
    min_contrast: float = DEFAULT_MIN_CONTRAST,
) -> UserAssignment:
    """Greedily pick clusters whose upper resonances are mutually separated.

    Clusters are visited by descending contrast of their upper peak; a
    cluster is taken when its resonance lies at least ``min_separation``
    from every resonance already taken. With ``targets``, user ``u`` is
    instead bound to the eligible cluster whose resonance is nearest to
    ``targets[u]`` (within ``target_tolerance``, default min_separation/2).

    Clusters whose ROI overlaps another cluster's ROI are never eligible.
    A short assignment is returned with ``partial`` set, not raised.

    Args:
        fits: Per-cluster fits keyed by cluster id.
        n_users: Users requested.
        min_separation: Minimum spacing of assigned resonances in MHz.
        centroids: ROI centres keyed by cluster id, for the overlap check.
        roi_radius: ROI radius in micrometres.
        targets: Optional per-user resonance targets in MHz.
        target_tolerance: Largest accepted distance to a target.
        min_contrast: Fits with a shallower upper peak are ignored.
    """
    if min_separation <= 0:
        raise AssignmentError("min_separation must be positive")
    if n_users < 0:
        raise AssignmentError("n_users must be non-negative")
    if targets is not None and len(targets) != n_users:
        raise AssignmentError(f"{len(targets)} targets for {n_users} users")

    excluded: set[int] = set()
    if centroids is not None and roi_radius is not None:
        ids = list(centroids)
        excluded = {ids[i] for i in overlapping_rois([centroids[c] for c in ids], roi_radius)}

    candidates = _eligible(fits, min_separation, min_contrast, excluded)
    candidates.sort(key=lambda item: (-item[1].upper.contrast, item[0]))

    chosen: list[tuple[int, LorentzianFit]] = []

    def separated(fit: LorentzianFit) -> bool:
        return all(abs(fit.upper.center - c.upper.center) >= min_separation for _, c in chosen)

    if targets is None:
        for cluster_id, fit in candidates:
            if len(chosen) == n_users:
                break
            if separated(fit):
                chosen.append((cluster_id, fit))
    else:
        tolerance = min_separation / 2.0 if target_tolerance is None else target_tolerance
        for target in targets:
            pool = [
                (abs(fit.upper.center - target), cid, fit)
                for cid, fit in candidates
                if all(cid != taken for taken, _ in chosen) and separated(fit)
            ]
            pool = [item for item in pool if item[0] <= tolerance]
            if not pool:
                logger.warning("No cluster resonates within {} MHz of {} MHz", tolerance, target)
                break
            _, cid, fit = min(pool, key=lambda item: (item[0], item[1]))
            chosen.append((cid, fit))

    channels = tuple(
        UserChannel(
            user=user,
            cluster_id=cid,
            resonance_mhz=fit.upper.center,
            contrast=fit.upper.contrast,
            centroid=None if centroids is None else centroids.get(cid),
        )
        for user, (cid, fit) in enumerate(chosen)
    )
    assignment = UserAssignment(
        channels=channels,
        requested_users=n_users,
        total_clusters=len(fits),
        min_separation=min_separation,
        roi_radius=roi_radius,
    )
    if assignment.partial:
        logger.warning("Partial assignment: {}/{} users placed", assignment.n_assigned, n_users)
    return assignment
