from __future__ import annotations
import math
from collections.abc import Sequence
from dataclasses import dataclass
import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.stats import linregress


__all__ = [
    "MIN_FIT_POINTS",
    "FitResult",
    "decay_rate_curve",
    "fit_exponential",
    "centroid",
    "centroid_velocity",
]

MIN_FIT_POINTS = 10


@dataclass(frozen=True)
class FitResult:
    """
    Outcome of a log-linear fit of a decaying population.

    :param gamma_fit: The fitted decay rate, minus the slope of ``ln P``.
    :param window: The ``(t_start, t_end)`` window the fit used.
    :param r_squared: Coefficient of determination of the linear fit.
    :param n_points: Number of samples in the window.
    :param amplitude: The fitted ``P`` extrapolated to ``t = 0``.
    """
    gamma_fit: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError(f"Empty fit window {self.window}.")
        if self.n_points < MIN_FIT_POINTS:
            raise ValueError(
                f"A fit needs at least {MIN_FIT_POINTS} points, "
                f"got {self.n_points}."
            )
        if not math.isfinite(self.gamma_fit):
            raise ValueError(f"Non-finite fitted rate {self.gamma_fit}.")


def _as_series(P, times) -> tuple[np.ndarray, np.ndarray]:
    P = np.asarray(P, dtype=float)
    times = np.asarray(times, dtype=float)
    if P.shape != times.shape or P.ndim != 1:
        raise ValueError(
            f"P and times must be 1-d arrays of the same length, got "
            f"{P.shape} and {times.shape}."
        )
    return P, times


def _segment_bounds(
    times: np.ndarray,
    breakpoints: Sequence[float]
) -> list[int]:
    bounds = [0]
    if len(breakpoints) and times.size > 1:
        tolerance = 1e-6 * np.min(np.abs(np.diff(times)))
        cuts = np.searchsorted(
            times, np.asarray(breakpoints, dtype=float) - tolerance
        )
        for cut in sorted(set(cuts.tolist())):
            if cut - bounds[-1] >= 2 and times.size - cut >= 2:
                bounds.append(cut)
    bounds.append(times.size)
    return bounds


def decay_rate_curve(
    P: np.ndarray,
    times: np.ndarray,
    smooth_window: int = 5,
    breakpoints: Sequence[float] = ()
) -> np.ndarray:
    """
    Instantaneous decay rate ``Gamma(t) = -d ln P / dt``.

    The derivative is taken with central differences (one-sided at the
    ends) and smoothed with a moving average of ``smooth_window`` points.
    Neither step crosses a breakpoint: the samples are split into segments
    starting at each breakpoint, and each segment is differentiated and
    smoothed on its own. A sample lying on a breakpoint opens the next
    segment.

    :param P: Population samples, all positive.
    :param times: Sample times, increasing.
    :param smooth_window: Odd number of points of the moving average.
    :param breakpoints: Times where the derivative of ``P`` may jump, such
                        as the multiples of a delay.
    :return: ``Gamma`` at every sample.
    :raises ValueError: If ``P`` has non-positive entries or the window is
                        not a positive odd integer.
    """
    P, times = _as_series(P, times)
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ValueError(
            f"smooth_window must be a positive odd integer, "
            f"got {smooth_window}."
        )
    if np.any(P <= 0):
        index = int(np.argmax(P <= 0))
        raise ValueError(
            f"ln P is undefined: P={P[index]} at t={times[index]}."
        )
    if P.size < 2:
        raise ValueError("At least two samples are needed.")
    log_P = np.log(P)
    rates = np.empty_like(P)
    bounds = _segment_bounds(times, breakpoints)
    for start, stop in zip(bounds[:-1], bounds[1:]):
        segment = -np.gradient(log_P[start:stop], times[start:stop])
        if smooth_window > 1:
            segment = uniform_filter1d(segment, size=smooth_window,
                                       mode="nearest")
        rates[start:stop] = segment
    return rates


def fit_exponential(
    P: np.ndarray,
    times: np.ndarray,
    window: tuple[float, float]
) -> FitResult:
    """
    Least squares fit of ``ln P = ln P0 - gamma t`` over a time window.

    :param P: Population samples.
    :param times: Sample times.
    :param window: The ``(t_start, t_end)`` window, inside the time range.
    :return: The fit.
    :raises ValueError: If the window is empty or outside the time range,
                        holds fewer than 10 samples or non-positive ``P``.
    """
    P, times = _as_series(P, times)
    t_start, t_end = (float(w) for w in window)
    if not t_start < t_end:
        raise ValueError(f"Empty fit window ({t_start}, {t_end}).")
    slack = 1e-9 * max(1.0, abs(times[-1] - times[0]))
    if t_start < times[0] - slack or t_end > times[-1] + slack:
        raise ValueError(
            f"Fit window ({t_start}, {t_end}) is outside the time range "
            f"[{times[0]}, {times[-1]}]."
        )
    inside = (times >= t_start - slack) & (times <= t_end + slack)
    n_points = int(np.count_nonzero(inside))
    if n_points < MIN_FIT_POINTS:
        raise ValueError(
            f"Fit window ({t_start}, {t_end}) holds {n_points} samples, "
            f"at least {MIN_FIT_POINTS} are needed."
        )
    if np.any(P[inside] <= 0):
        raise ValueError(
            f"P must be positive in the fit window ({t_start}, {t_end})."
        )
    fit = linregress(times[inside], np.log(P[inside]))
    return FitResult(
        gamma_fit=-float(fit.slope),
        window=(t_start, t_end),
        r_squared=float(fit.rvalue) ** 2,
        n_points=n_points,
        amplitude=math.exp(fit.intercept),
    )


def centroid(photons: np.ndarray) -> np.ndarray:
    """
    Mean site ``<x> = sum x P(x) / sum P(x)`` of every row, sites being
    numbered from 1.

    :param photons: Amplitudes (complex) or probabilities (real), one row
                    per time.
    """
    photons = np.atleast_2d(photons)
    prob = np.abs(photons) ** 2 if np.iscomplexobj(photons) else photons
    sites = np.arange(1, prob.shape[1] + 1)
    return prob @ sites / prob.sum(axis=1)


def centroid_velocity(
    photons: np.ndarray,
    times: np.ndarray,
    edge_sites: int = 5,
    edge_tolerance: float = 1e-6
) -> float:
    """
    Speed of a photon wave packet: slope of a linear fit of its centroid.

    :param photons: Photon amplitudes or probabilities, one row per time.
    :param times: Times of the rows.
    :param edge_sites: Number of sites at each end regarded as the edge.
    :param edge_tolerance: Largest probability fraction tolerated there.
    :return: The centroid velocity in sites per unit time.
    :raises ValueError: If the packet reaches the lattice edge.
    """
    photons = np.atleast_2d(photons)
    times = np.asarray(times, dtype=float)
    if photons.shape[0] != times.size:
        raise ValueError(
            f"{photons.shape[0]} photon rows for {times.size} times."
        )
    prob = np.abs(photons) ** 2 if np.iscomplexobj(photons) else photons
    total = prob.sum(axis=1)
    edge = prob[:, :edge_sites].sum(axis=1) + prob[:, -edge_sites:].sum(axis=1)
    leaked = edge / total
    if np.any(leaked > edge_tolerance):
        index = int(np.argmax(leaked > edge_tolerance))
        raise ValueError(
            f"The packet reaches the lattice edge at t={times[index]} "
            f"(edge fraction {leaked[index]:.3g})."
        )
    return float(linregress(times, centroid(prob)).slope)
