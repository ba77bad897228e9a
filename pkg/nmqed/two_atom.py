"""
Two atoms coupled through a one dimensional continuum waveguide, with
retardation. Atom A sits at ``x = 0`` and atom B at ``x = T·v_g``; each
atom decays locally with rate ``gamma0`` and into the guide with rate
``gamma1d``, and the field emitted by one atom reaches the other after the
retardation time ``T``:

    dc_i/dt = -gamma/2 · [c_i(t) + beta · e^{i phi} · c_j(t - T) · Θ(t - T)]
"""
from __future__ import annotations
import math
import logging
from dataclasses import dataclass, field
import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gammaln
from .dde import DdeProblem, DdeTrajectory, integrate


__all__ = [
    "DARK_STATE",
    "BRIGHT_STATE",
    "TwoAtomParams",
    "Trajectory",
    "FieldGrid",
    "evolve",
    "evolve_dark_state",
    "series_solution",
    "population",
    "default_x_grid",
    "default_t_grid",
    "field_intensity_map",
    "field_trace",
    "field_energy",
    "confinement_ratio",
    "bound_state_population",
]

logger = logging.getLogger(__name__)

DARK_STATE = (1 / math.sqrt(2), -1 / math.sqrt(2))
BRIGHT_STATE = (1 / math.sqrt(2), 1 / math.sqrt(2))


@dataclass(frozen=True)
class TwoAtomParams:
    """
    Physical parameters of the continuum model.

    :param gamma0: Local (free space) decay rate. ``0`` selects the lossless
                   mode, where ``beta`` must be ``1`` and the guided rate is
                   ``lossless_rate``.
    :param beta: Coupling efficiency ``gamma1d / gamma``, in ``[0, 1)``.
    :param T: Retardation time between the atoms.
    :param phase_phi: Propagation phase accumulated between the atoms.
    :param v_g: Group velocity; lengths are measured so that ``d = T·v_g``.
    :param lossless_rate: The guided decay rate used in lossless mode.
    """
    gamma0: float = 1.0
    beta: float = 0.5
    T: float = 1.0
    phase_phi: float = 0.0
    v_g: float = 1.0
    lossless_rate: float = 1.0

    def __post_init__(self):
        for name in ("gamma0", "beta", "T", "phase_phi", "v_g",
                     "lossless_rate"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}.")
        if self.gamma0 < 0:
            raise ValueError(f"gamma0 must be >= 0, got {self.gamma0}.")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}.")
        if self.v_g <= 0:
            raise ValueError(f"v_g must be positive, got {self.v_g}.")
        if self.lossless:
            if self.beta != 1:
                raise ValueError(
                    "gamma0 = 0 selects the lossless mode, which requires "
                    f"beta = 1, got beta={self.beta}."
                )
            if self.lossless_rate <= 0:
                raise ValueError(
                    "lossless_rate must be positive, "
                    f"got {self.lossless_rate}."
                )
        elif not 0 <= self.beta < 1:
            raise ValueError(
                f"beta must lie in [0, 1) when gamma0 > 0, got {self.beta}."
            )

    @property
    def lossless(self) -> bool:
        """Whether the local decay is switched off."""
        return self.gamma0 == 0

    @property
    def gamma1d(self) -> float:
        """Decay rate into the guided mode."""
        if self.lossless:
            return float(self.lossless_rate)
        return self.beta * self.gamma0 / (1 - self.beta)

    @property
    def gamma(self) -> float:
        """Total single-atom decay rate."""
        return self.gamma0 + self.gamma1d

    @property
    def distance(self) -> float:
        """Distance between the atoms."""
        return self.T * self.v_g

    @property
    def phase_factor(self) -> complex:
        """The propagation factor ``e^{i phi}``."""
        return complex(math.cos(self.phase_phi), math.sin(self.phase_phi))

    @property
    def zero_phase(self) -> bool:
        """Whether ``e^{i phi} = 1``."""
        return abs(self.phase_factor - 1) < 1e-12

    @property
    def feedback(self) -> complex:
        """Coefficient of the delayed amplitude, ``gamma beta/2 e^{i phi}``."""
        return 0.5 * self.gamma1d * self.phase_factor


@dataclass(frozen=True)
class Trajectory:
    """
    Complex amplitudes of both atoms on the integration grid. ``solution``
    carries the dense interpolant used for retarded reads.
    """
    times: np.ndarray
    cA: np.ndarray
    cB: np.ndarray
    solution: DdeTrajectory | None = field(default=None, repr=False)

    @property
    def P(self) -> np.ndarray:
        """Total excited state population."""
        return population(self)

    def amplitudes(self, t: float | np.ndarray) -> np.ndarray:
        """
        Interpolated amplitudes ``(cA, cB)`` at arbitrary times, zero
        before the origin.

        :raises ValueError: If the trajectory has no dense solution or
                            ``t`` is past its end.
        """
        if self.solution is None:
            raise ValueError("This trajectory carries no dense solution.")
        return self.solution.evaluate(t)


@dataclass(frozen=True)
class FieldGrid:
    """
    Space-time map of the field intensity, ``intensity[i, j]`` being
    ``I(x[j], t[i])``.
    """
    x: np.ndarray
    t: np.ndarray
    intensity: np.ndarray

    @property
    def peak(self) -> float:
        """The largest intensity of the map."""
        return float(np.max(self.intensity)) if self.intensity.size else 0.0

    def normalized(self) -> FieldGrid:
        """Return the same map scaled to a peak of 1."""
        peak = self.peak
        if peak == 0:
            return self
        return FieldGrid(self.x, self.t, self.intensity / peak)


def population(traj: Trajectory) -> np.ndarray:
    """
    Total excited state population ``|cA|^2 + |cB|^2``.

    :param traj: The trajectory.
    :return: The population at every sample.
    """
    return np.abs(traj.cA) ** 2 + np.abs(traj.cB) ** 2


def evolve(
    params: TwoAtomParams,
    t_max: float,
    dt: float = 1e-3,
    initial: tuple[complex, complex] = DARK_STATE
) -> Trajectory:
    """
    Integrate the retarded two-atom equations from the given amplitudes.

    :param params: The physical parameters.
    :param t_max: Final time.
    :param dt: Requested step (aligned to the retardation by the engine).
    :param initial: Amplitudes ``(cA(0), cB(0))``.
    :return: The amplitudes on the integration grid.
    """
    decay = -0.5 * params.gamma * np.eye(2)
    swap = np.array([[0, 1], [1, 0]], dtype=complex)
    problem = DdeProblem(
        A=decay,
        B=-params.feedback * swap,
        delay=params.T,
        y0=np.asarray(initial, dtype=complex)
    )
    solution = integrate(problem, t_max, dt)
    logger.debug(
        "Two-atom run gamma=%r gamma1d=%r T=%r: %d samples",
        params.gamma, params.gamma1d, params.T, solution.times.size
    )
    return Trajectory(
        times=solution.times,
        cA=solution.values[:, 0],
        cB=solution.values[:, 1],
        solution=solution
    )


def evolve_dark_state(
    params: TwoAtomParams,
    t_max: float,
    dt: float = 1e-3
) -> Trajectory:
    """
    Evolve the dark state ``(|eg> - |ge>)/sqrt(2)``.

    :param params: The physical parameters.
    :param t_max: Final time.
    :param dt: Requested step.
    :return: The amplitudes on the integration grid.
    """
    return evolve(params, t_max, dt, DARK_STATE)


def series_solution(
    params: TwoAtomParams,
    t: float | np.ndarray,
    c0: complex = DARK_STATE[0]
) -> complex | np.ndarray:
    """
    Closed form amplitude of atom A for an antisymmetric initial state,

        c(t) = sum_{n <= t/T} a^n (t - nT)^n / n! e^{-gamma (t - nT)/2} c(0)

    with ``a = (gamma beta / 2) e^{i phi}``. For ``T = 0`` the series is
    replaced by ``c(0) e^{-(gamma/2 - a) t}``.

    :param params: The physical parameters.
    :param t: A time or an array of times, all >= 0.
    :param c0: The initial amplitude of atom A.
    :return: ``c(t)`` with the shape of ``t``.
    """
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_arr = np.atleast_1d(t_arr)
    if np.any(t_arr < 0):
        raise ValueError("series_solution is defined for t >= 0.")
    a = params.feedback
    half = 0.5 * params.gamma
    if params.T == 0:
        result = c0 * np.exp(-(half - a) * t_arr)
        return complex(result[0]) if scalar else result

    result = np.exp(-half * t_arr).astype(complex)
    if a != 0:
        log_a = math.log(abs(a))
        arg_a = math.atan2(a.imag, a.real)
        n_max = int(np.floor(np.max(t_arr) / params.T)) if t_arr.size else 0
        for n in range(1, n_max + 1):
            lag = t_arr - n * params.T
            live = lag > 0
            if not np.any(live):
                break
            s = lag[live]
            log_term = n * log_a + n * np.log(s) - gammaln(n + 1) - half * s
            result[live] += np.exp(log_term + 1j * n * arg_a)
    result = c0 * result
    return complex(result[0]) if scalar else result


def default_x_grid(
    params: TwoAtomParams,
    points: int = 801,
    span: tuple[float, float] = (-2.0, 3.0)
) -> np.ndarray:
    """
    Default positions for field maps: ``points`` samples over
    ``[span[0]·d, span[1]·d]``, with ``d`` the atomic distance (or the
    decay length ``v_g/gamma`` when the atoms coincide).
    """
    unit = params.distance if params.distance > 0 else \
        params.v_g / params.gamma
    return np.linspace(span[0] * unit, span[1] * unit, points)


def default_t_grid(traj: Trajectory, rows: int = 600) -> np.ndarray:
    """The trajectory grid, thinned to at most ``rows`` samples."""
    stride = max(1, math.ceil(traj.times.size / rows))
    return traj.times[::stride]


def _field_amplitudes(
    params: TwoAtomParams,
    traj: Trajectory,
    x: np.ndarray,
    t: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Right and left moving field amplitudes on the ``(t, x)`` mesh. Sources
    count for the right moving field at ``x >= x_i`` and for the left
    moving one at ``x < x_i``, so the values at the atoms are the right
    limits.
    """
    x_mesh = x[np.newaxis, :]
    t_mesh = t[:, np.newaxis]
    wavenumber = params.phase_phi / params.distance \
        if params.distance > 0 else 0.0
    right = np.zeros((t.size, x.size), dtype=complex)
    left = np.zeros_like(right)
    for i, x_i in enumerate((0.0, params.distance)):
        offset = x_mesh - x_i
        gap = np.abs(offset)
        retarded = t_mesh - gap / params.v_g
        lit = retarded >= 0
        amplitude = np.zeros_like(right)
        amplitude[lit] = traj.amplitudes(retarded[lit])[:, i]
        amplitude *= np.exp(1j * wavenumber * gap)
        downstream = np.broadcast_to(offset >= 0, right.shape)
        right[downstream] += amplitude[downstream]
        left[~downstream] += amplitude[~downstream]
    scale = math.sqrt(params.gamma1d / (2 * params.v_g))
    return scale * right, scale * left


def field_intensity_map(
    params: TwoAtomParams,
    traj: Trajectory,
    x_grid: np.ndarray | None = None,
    t_grid: np.ndarray | None = None
) -> FieldGrid:
    """
    Reconstruct the guided field intensity ``|E_R|^2 + |E_L|^2`` from the
    retarded atomic amplitudes.

    :param params: The parameters the trajectory was computed with.
    :param traj: A trajectory with its dense solution.
    :param x_grid: Positions; :func:`default_x_grid` when omitted.
    :param t_grid: Times; :func:`default_t_grid` when omitted.
    :return: The intensity map, not normalized.
    :raises ValueError: If ``t_grid`` exceeds the trajectory range.
    """
    x = default_x_grid(params) if x_grid is None \
        else np.asarray(x_grid, dtype=float)
    t = default_t_grid(traj) if t_grid is None \
        else np.asarray(t_grid, dtype=float)
    if t.size and t.max() > traj.times[-1] * (1 + 1e-12):
        raise ValueError(
            f"t_grid reaches {t.max()}, beyond the trajectory end "
            f"{traj.times[-1]}."
        )
    right, left = _field_amplitudes(params, traj, x, t)
    intensity = np.abs(right) ** 2 + np.abs(left) ** 2
    return FieldGrid(x=x, t=t, intensity=intensity)


def field_trace(
    params: TwoAtomParams,
    traj: Trajectory,
    times: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Intensity right next to atom A (``x = 0+``) as a function of time,
    normalized to a maximum of 1.

    :return: The times and the normalized intensity.
    """
    t = traj.times if times is None else np.asarray(times, dtype=float)
    grid = field_intensity_map(params, traj, np.array([0.0]), t)
    trace = grid.intensity[:, 0]
    peak = trace.max() if trace.size else 0.0
    return t, trace / peak if peak > 0 else trace


def field_energy(grid: FieldGrid) -> np.ndarray:
    """The integral of the intensity over ``x`` at every time of the map."""
    return trapezoid(grid.intensity, grid.x, axis=1)


def confinement_ratio(
    grid: FieldGrid,
    params: TwoAtomParams,
    t: float,
    margin: float | None = None
) -> float:
    """
    Mean intensity just outside the pair, within ``margin`` of either
    atom, over the peak intensity between the atoms, at the map row
    closest to ``t``.

    :param margin: Width of the outer windows, ``d/2`` by default.
    """
    d = params.distance
    if d <= 0:
        raise ValueError("The atoms coincide: there is no interior.")
    margin = 0.5 * d if margin is None else margin
    row = grid.intensity[int(np.argmin(np.abs(grid.t - t)))]
    inside = (grid.x > 0) & (grid.x < d)
    outside = ((grid.x >= -margin) & (grid.x < 0)) \
        | ((grid.x > d) & (grid.x <= d + margin))
    if not np.any(inside) or not np.any(outside):
        raise ValueError("The grid does not resolve the pair.")
    return float(np.mean(row[outside]) / np.max(row[inside]))


def bound_state_population(params: TwoAtomParams) -> float:
    """
    Population left in the atom-photon bound state of the lossless mode,
    starting from the dark state: ``1 / (1 + gamma1d T / 2)^2``.

    :raises ValueError: If the parameters are not lossless with zero phase.
    """
    if not params.lossless or not params.zero_phase:
        raise ValueError(
            "A bound state exists only in the lossless mode with phi = 0."
        )
    return 1.0 / (1.0 + 0.5 * params.gamma1d * params.T) ** 2
