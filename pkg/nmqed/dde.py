"""
Fixed-delay linear delay differential equations

    dy/dt = A·y(t) + B·y(t − T)·Θ(t − T),    y(t) = 0 for t < 0,

solved with the method of steps: the time grid contains every multiple of
the delay, each segment [kT, (k+1)T] is an ODE whose forcing is read from
the already computed previous segment, and every step is a classic
fourth-order Runge-Kutta step. The history is kept as a dense cubic
Hermite interpolant built from the stored values and one-sided slopes.
"""
from __future__ import annotations
import math
import logging
from dataclasses import dataclass
import numpy as np
from .errors import GuardError, DivergenceError


__all__ = [
    "MAX_SAMPLES",
    "DdeProblem",
    "DdeTrajectory",
    "HistoryBuffer",
    "integrate",
]

logger = logging.getLogger(__name__)

MAX_SAMPLES = 10_000_000
# Distance from a grid point, in steps, below which a time is the grid point.
_ON_GRID = 1e-8


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _hermite(
    step: float,
    values: np.ndarray,
    slopes_in: np.ndarray,
    slopes_out: np.ndarray,
    t: float | np.ndarray
) -> np.ndarray:
    """
    Evaluate the piecewise cubic Hermite interpolant of samples taken on
    the grid ``k * step``. Times before zero evaluate to the zero
    pre-history, times on the grid return the stored samples exactly.
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    size = values.shape[0]
    out = np.zeros(t.shape + values.shape[1:], dtype=values.dtype)
    u = t / step
    nearest = np.rint(u)
    on_grid = (np.abs(u - nearest) <= _ON_GRID) & (nearest >= 0)
    grid_idx = nearest[on_grid].astype(int)
    out[on_grid] = values[grid_idx]
    between = ~on_grid & (t > 0)
    if np.any(between) and size > 1:
        idx = np.minimum(np.floor(u[between]).astype(int), size - 2)
        theta = (u[between] - idx)[:, np.newaxis]
        h00 = (1 + 2 * theta) * (1 - theta) ** 2
        h10 = theta * (1 - theta) ** 2
        h01 = theta ** 2 * (3 - 2 * theta)
        h11 = theta ** 2 * (theta - 1)
        out[between] = (
            h00 * values[idx]
            + h10 * step * slopes_out[idx]
            + h01 * values[idx + 1]
            + h11 * step * slopes_in[idx + 1]
        )
    return out[0] if scalar else out


@dataclass(frozen=True)
class DdeProblem:
    """
    A linear DDE with a single fixed delay and zero pre-history.

    :param A: Square matrix acting on the instantaneous state.
    :param B: Square matrix acting on the delayed state ``y(t - delay)``.
    :param delay: The delay ``T >= 0``. With ``T = 0`` the problem is the
                  ODE ``dy/dt = (A + B)·y``.
    :param y0: The initial value ``y(0)``.
    """
    A: np.ndarray
    B: np.ndarray
    delay: float
    y0: np.ndarray

    def __post_init__(self):
        a = np.array(self.A, dtype=complex, ndmin=2)
        b = np.array(self.B, dtype=complex, ndmin=2)
        y0 = np.array(self.y0, dtype=complex, ndmin=1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be a square matrix, got {a.shape}.")
        if b.shape != a.shape:
            raise ValueError(
                f"B must have the same shape as A {a.shape}, got {b.shape}."
            )
        if y0.shape != (a.shape[0],):
            raise ValueError(
                f"y0 must have {a.shape[0]} components, got {y0.shape}."
            )
        delay = float(self.delay)
        if not math.isfinite(delay) or delay < 0:
            raise ValueError(f"The delay must be finite and >= 0, "
                             f"got {self.delay}.")
        object.__setattr__(self, "A", _frozen(a))
        object.__setattr__(self, "B", _frozen(b))
        object.__setattr__(self, "y0", _frozen(y0))
        object.__setattr__(self, "delay", delay)

    @property
    def dimension(self) -> int:
        """The number of components of the state vector."""
        return self.A.shape[0]


@dataclass(frozen=True)
class DdeTrajectory:
    """
    Samples of a DDE solution on the uniform grid ``times = k * step``,
    with the left (``slopes_in``) and right (``slopes_out``) derivatives
    at every sample. The two only differ at ``t = delay``.
    """
    step: float
    times: np.ndarray
    values: np.ndarray
    slopes_in: np.ndarray
    slopes_out: np.ndarray

    def evaluate(self, t: float | np.ndarray) -> np.ndarray:
        """
        Dense output of the solution through cubic Hermite interpolation.

        :param t: A time or an array of times.
        :return: ``y(t)``, with shape ``t.shape + (dimension,)``.
        :raises ValueError: If a time lies after the last sample.
        """
        t_arr = np.asarray(t, dtype=float)
        limit = self.times[-1] + _ON_GRID * self.step
        if t_arr.size and np.max(t_arr) > limit:
            raise ValueError(
                f"Requested time {np.max(t_arr)} exceeds the trajectory "
                f"range [0, {self.times[-1]}]."
            )
        return _hermite(
            self.step, self.values, self.slopes_in, self.slopes_out, t
        )


class HistoryBuffer:
    """
    Preallocated store of the samples computed so far, with dense cubic
    Hermite evaluation. The whole history is kept, so once the current
    time reaches the delay the window ``[t_now - delay, t_now]`` is always
    available.
    """

    def __init__(
        self,
        step: float,
        capacity: int,
        dimension: int
    ):
        """
        :param step: The uniform sampling step.
        :param capacity: Maximum number of samples.
        :param dimension: Number of components of each sample.
        """
        if step <= 0:
            raise ValueError(f"The step must be positive, got {step}.")
        self.step = float(step)
        self._values = np.zeros((capacity, dimension), dtype=complex)
        self._slopes_in = np.zeros_like(self._values)
        self._slopes_out = np.zeros_like(self._values)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    @property
    def t_now(self) -> float:
        """The time of the last stored sample."""
        return (self._size - 1) * self.step

    @property
    def times(self) -> np.ndarray:
        """The times of the stored samples."""
        return np.arange(self._size) * self.step

    @property
    def values(self) -> np.ndarray:
        """A read-only view on the stored samples."""
        view = self._values[:self._size]
        view.flags.writeable = False
        return view

    def append(
        self,
        value: np.ndarray,
        slope_in: np.ndarray,
        slope_out: np.ndarray
    ) -> None:
        """
        Store the sample at ``t_now + step``.

        :param value: The state at the new sample time.
        :param slope_in: The derivative approaching from the left.
        :param slope_out: The derivative leaving to the right.
        :raises ValueError: If the buffer is full.
        """
        if self._size == self._values.shape[0]:
            raise ValueError(
                f"History buffer full ({self._size} samples)."
            )
        self._values[self._size] = value
        self._slopes_in[self._size] = slope_in
        self._slopes_out[self._size] = slope_out
        self._size += 1

    def set_slope_out(self, index: int, slope: np.ndarray) -> None:
        """Replace the right derivative of an already stored sample."""
        if not 0 <= index < self._size:
            raise IndexError(f"No sample with index {index}.")
        self._slopes_out[index] = slope

    def evaluate(self, t: float | np.ndarray) -> np.ndarray:
        """
        Evaluate the stored history at ``t``; zero before the origin.

        :raises ValueError: If ``t`` lies after the last stored sample.
        """
        t_arr = np.asarray(t, dtype=float)
        if t_arr.size and np.max(t_arr) > self.t_now + _ON_GRID * self.step:
            raise ValueError(
                f"History ends at t={self.t_now}, requested {np.max(t_arr)}."
            )
        n = self._size
        return _hermite(
            self.step,
            self._values[:n],
            self._slopes_in[:n],
            self._slopes_out[:n],
            t
        )

    def to_trajectory(self) -> DdeTrajectory:
        """Freeze the stored samples into a :class:`DdeTrajectory`."""
        n = self._size
        return DdeTrajectory(
            step=self.step,
            times=_frozen(self.times),
            values=_frozen(self._values[:n].copy()),
            slopes_in=_frozen(self._slopes_in[:n].copy()),
            slopes_out=_frozen(self._slopes_out[:n].copy()),
        )


def _rk4_step(
    a: np.ndarray,
    y: np.ndarray,
    h: float,
    forcing: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    One Runge-Kutta step of ``dy/dt = a·y + g(t)``, with ``g`` given at the
    start, middle and end of the step. Without forcing the step is the one
    of the homogeneous system.

    :return: The new state, the right derivative at the start of the step
             and the left derivative at its end.
    """
    if forcing is None:
        k1 = a @ y
        k2 = a @ (y + 0.5 * h * k1)
        k3 = a @ (y + 0.5 * h * k2)
        k4 = a @ (y + h * k3)
        y_new = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return y_new, k1, a @ y_new
    g1, g2, g4 = forcing
    k1 = a @ y + g1
    k2 = a @ (y + 0.5 * h * k1) + g2
    k3 = a @ (y + 0.5 * h * k2) + g2
    k4 = a @ (y + h * k3) + g4
    y_new = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y_new, k1, a @ y_new + g4


def _check_step(delay: float, t_max: float, dt: float) -> None:
    if not math.isfinite(dt) or dt <= 0:
        raise ValueError(f"The time step must be positive, got dt={dt}.")
    if not math.isfinite(t_max) or t_max <= 0:
        raise ValueError(f"t_max must be positive, got t_max={t_max}.")
    if delay > 0 and dt > delay / 10 * (1 + 1e-12):
        raise GuardError(
            f"Accuracy guard: dt={dt} exceeds T/10={delay / 10} "
            f"for the delay T={delay}."
        )
    if t_max / dt > MAX_SAMPLES:
        raise GuardError(
            f"Resource guard: t_max/dt={t_max / dt:.6g} exceeds "
            f"{MAX_SAMPLES} samples."
        )


def integrate(problem: DdeProblem, t_max: float, dt: float) -> DdeTrajectory:
    """
    Integrate a :class:`DdeProblem` from 0 up to (at least) ``t_max``.

    The step is adjusted to ``T / round(T / dt)`` so that every multiple of
    the delay is a grid point; no step straddles a derivative breakpoint.
    Before the first breakpoint the delayed term is skipped altogether, so
    the samples there are those of the undelayed system.

    :param problem: The problem to solve.
    :param t_max: The final time.
    :param dt: The requested time step.
    :return: The sampled solution with its dense interpolant.
    :raises ValueError: If ``dt`` or ``t_max`` are not positive.
    :raises GuardError: If ``dt > T/10`` with ``T > 0`` (accuracy guard) or
                        the number of samples exceeds :data:`MAX_SAMPLES`.
    :raises DivergenceError: If non-finite values are produced.
    """
    delay = problem.delay
    _check_step(delay, t_max, dt)
    a = problem.A
    b = problem.B
    if delay > 0:
        per_delay = max(1, int(round(delay / dt)))
        step = delay / per_delay
        if step != dt:
            logger.debug(
                "Time step adjusted from %r to %r to align with T=%r",
                dt, step, delay
            )
    else:
        per_delay = 0
        step = dt
        a = a + b
    delayed_coupling = per_delay > 0 and np.any(b != 0)
    n_steps = max(1, math.ceil(t_max / step - 1e-9))
    segment = per_delay if per_delay else n_steps

    history = HistoryBuffer(step, n_steps + 1, problem.dimension)
    y = problem.y0.copy()
    slope = a @ y
    history.append(y, slope, slope)

    start = 0
    while start < n_steps:
        end = min(start + segment, n_steps)
        forcing = None
        if delayed_coupling and start >= per_delay:
            forcing = _delayed_forcing(
                history, b, start, end, per_delay
            )
        for j in range(start, end):
            step_forcing = None
            if forcing is not None:
                i = j - start
                step_forcing = (forcing[0][i], forcing[1][i], forcing[2][i])
            y, slope_out, slope_in = _rk4_step(a, y, step, step_forcing)
            history.set_slope_out(j, slope_out)
            history.append(y, slope_in, slope_in)
        if not np.all(np.isfinite(history.values[start:end + 1])):
            raise DivergenceError(
                f"Non-finite values in the segment "
                f"[{start * step}, {end * step}]."
            )
        start = end

    logger.debug("Integrated %d steps of size %r", n_steps, step)
    return history.to_trajectory()


def _delayed_forcing(
    history: HistoryBuffer,
    b: np.ndarray,
    start: int,
    end: int,
    per_delay: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Precompute ``B·y(t - T)`` at the start, midpoint and end of every step
    of the segment ``[start, end)``. The start and end values are stored
    samples, the midpoints come from the Hermite interpolant.
    """
    stored = history.values
    lagged = np.arange(start, end) - per_delay
    mid_times = (lagged + 0.5) * history.step
    g_start = stored[lagged] @ b.T
    g_mid = history.evaluate(mid_times) @ b.T
    g_end = stored[lagged + 1] @ b.T
    return g_start, g_mid, g_end
