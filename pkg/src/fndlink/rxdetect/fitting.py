"""
Least-squares Lorentzian fitting of ODMR traces.

The model is ``baseline * (1 - sum_k C_k * L(f; f0_k, fwhm_k))``. Fits use
lmfit's Levenberg-Marquardt driver, initialised from the deepest local
minima of the trace.
"""

from typing import Sequence

import numpy as np
from lmfit import Minimizer, Parameters
from scipy.signal import find_peaks, peak_widths

from fndlink.errors import FitError
from fndlink.logger import get_logger

from .models import LorentzianFit, LorentzianPeak, OdmrScan

logger = get_logger(__name__)

FIT_TOLERANCE = 1e-9
MAX_ITERATIONS = 200
MAX_CONTRAST = 0.999


def _residual(params: Parameters, f: np.ndarray, data: np.ndarray, n_peaks: int) -> np.ndarray:
    v = params.valuesdict()
    dip = np.zeros_like(f)
    for k in range(n_peaks):
        half = 0.5 * v[f"fwhm{k}"]
        dip += v[f"contrast{k}"] * half**2 / ((f - v[f"center{k}"]) ** 2 + half**2)
    return v["baseline"] * (1.0 - dip) - data


def _initial_guess(f: np.ndarray, data: np.ndarray, n_peaks: int) -> tuple[float, list[tuple]]:
    baseline = float(np.max(data))
    span = float(f[-1] - f[0])
    step = span / (len(f) - 1)

    minima, props = find_peaks(-data, prominence=0.0)
    if len(minima):
        order = np.argsort(props["prominences"])[::-1][:n_peaks]
        minima = minima[order]
        widths = peak_widths(-data, minima, rel_height=0.5)[0] * step
    else:
        minima = np.array([int(np.argmin(data))])
        widths = np.array([span / 10.0])

    guesses = []
    for idx, width in zip(minima, widths):
        depth = 1.0 - data[idx] / baseline if baseline > 0 else 0.0
        guesses.append((float(f[idx]), max(float(width), 2.0 * step), min(max(depth, 1e-4), 0.5)))
    # fewer minima than peaks: spread the remaining guesses around the first
    while len(guesses) < n_peaks:
        c, w, d = guesses[0]
        shift = w if c + w <= f[-1] else -w
        guesses.append((c + shift, w, d / 2.0))
    return baseline, sorted(guesses)


def fit_lorentzian(
    frequencies: Sequence[float],
    trace: Sequence[float],
    n_peaks: int,
    *,
    max_iterations: int = MAX_ITERATIONS,
    tolerance: float = FIT_TOLERANCE,
) -> LorentzianFit:
    """Fit ``n_peaks`` Lorentzian dips to an ODMR trace.

    A fit that stops on the iteration limit is returned with
    ``converged=False`` and its best parameters so far.

    Raises:
        FitError: n_peaks not 1 or 2, or a trace too short for the model.
    """
    if n_peaks not in (1, 2):
        raise FitError(f"n_peaks must be 1 or 2, got {n_peaks}")
    f = np.asarray(frequencies, dtype=float)
    data = np.asarray(trace, dtype=float)
    if f.shape != data.shape or f.ndim != 1:
        raise FitError("frequencies and trace must be 1-D arrays of equal length")
    if len(f) < 3 * (3 * n_peaks + 1):
        raise FitError(f"trace of {len(f)} points is too short for {n_peaks} peak(s)")
    if np.any(np.diff(f) <= 0):
        raise FitError("frequency grid must be strictly increasing")

    baseline, guesses = _initial_guess(f, data, n_peaks)
    span = float(f[-1] - f[0])
    params = Parameters()
    params.add("baseline", value=baseline, min=0.0)
    for k, (center, fwhm, contrast) in enumerate(guesses):
        params.add(f"center{k}", value=center, min=float(f[0]), max=float(f[-1]))
        params.add(f"fwhm{k}", value=fwhm, min=1e-6 * span, max=span)
        params.add(f"contrast{k}", value=contrast, min=0.0, max=MAX_CONTRAST)

    nvarys = 1 + 3 * n_peaks
    minimizer = Minimizer(
        _residual,
        params,
        fcn_args=(f, data, n_peaks),
        max_nfev=max_iterations * (nvarys + 1),
    )
    out = minimizer.leastsq(ftol=tolerance, xtol=tolerance)
    converged = bool(out.success) and out.nfev < max_iterations * (nvarys + 1)

    v = out.params.valuesdict()
    peaks = sorted(
        (
            LorentzianPeak(
                center=float(v[f"center{k}"]),
                fwhm=float(v[f"fwhm{k}"]),
                contrast=float(min(v[f"contrast{k}"], MAX_CONTRAST)),
            )
            for k in range(n_peaks)
        ),
        key=lambda p: p.center,
    )
    result = LorentzianFit(
        baseline=float(v["baseline"]),
        peaks=tuple(peaks),
        residual_norm=float(np.linalg.norm(out.residual)),
        converged=converged,
        iterations=int(out.nfev),
        message=str(out.message),
    )
    if not converged:
        logger.warning("Lorentzian fit did not converge: {}", out.message)
    return result


def fit_scan(scan: OdmrScan, n_peaks: int) -> dict[int, LorentzianFit]:
    """Fit every ROI trace of a scan, keyed by ROI id."""
    fits = {}
    for roi_id, trace in zip(scan.roi_ids, scan.traces):
        fits[roi_id] = fit_lorentzian(scan.frequencies, trace, n_peaks)
    return fits
