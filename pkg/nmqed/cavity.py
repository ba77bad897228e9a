"""
Single excitation dynamics of two atomic ensembles coupled to a chain of
resonators with nearest neighbour tunnelling. Ensemble A (``N_A`` atoms)
sits at site ``x_A`` and ensemble B (``N_B`` atoms) at site ``x_B``; sites
are numbered from 1 to ``N``. Local decay enters as a complex transition
frequency ``omega_i - i gamma0 / 2``.

State vectors are ordered as ``[atoms A, atoms B, photons]``.
"""
from __future__ import annotations
import math
import warnings
import logging
from dataclasses import dataclass, field
from enum import Enum
import numpy as np
from scipy import sparse
from scipy.linalg import eig, eigh, solve
from .errors import GuardError, DivergenceError, DefectiveMatrixError, \
    PhaseConditionWarning


__all__ = [
    "MAX_ORACLE_DIMENSION",
    "CONDITION_LIMIT",
    "CavityParams",
    "InitialStateKind",
    "InitialState",
    "LatticeState",
    "LatticeTrajectory",
    "build_effective_hamiltonian",
    "initial_state",
    "check_padding",
    "evolve",
    "exact_diag_oracle",
    "round_trip_time",
    "round_trip_phase",
    "dispersion",
    "group_velocity",
    "momentum_distribution",
    "mirror_reflection",
]

logger = logging.getLogger(__name__)

MAX_ORACLE_DIMENSION = 400
CONDITION_LIMIT = 1e8
MAX_STEPS = 10_000_000


@dataclass(frozen=True)
class CavityParams:
    """
    Description of the resonator array and of the two ensembles.

    :param N: Number of resonators.
    :param x_A: Site of ensemble A.
    :param x_B: Site of ensemble B, ``x_B > x_A``.
    :param J: Tunnelling strength, sets the energy unit.
    :param omega_c: Resonator frequency.
    :param N_A: Atoms in ensemble A.
    :param N_B: Atoms in ensemble B.
    :param g_A: Atom-resonator coupling of ensemble A.
    :param g_B: Atom-resonator coupling of ensemble B.
    :param omega_A: Transition frequency of ensemble A, ``omega_c`` when
                    omitted.
    :param omega_B: Transition frequency of ensemble B, ``omega_c`` when
                    omitted.
    :param gamma0: Local decay rate of every atom.
    :param t_max: Optional duration the lattice must hold without the
                  reflections off its ends reaching the atoms.
    """
    N: int
    x_A: int
    x_B: int
    J: float = 1.0
    omega_c: float = 0.0
    N_A: int = 1
    N_B: int = 1
    g_A: float = 0.2
    g_B: float = 2.0
    omega_A: float | None = None
    omega_B: float | None = None
    gamma0: float = 0.05
    t_max: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.omega_A is None:
            object.__setattr__(self, "omega_A", self.omega_c)
        if self.omega_B is None:
            object.__setattr__(self, "omega_B", self.omega_c)
        for name in ("J", "omega_c", "g_A", "g_B", "omega_A", "omega_B",
                     "gamma0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(
                    f"{name} must be finite, got {getattr(self, name)}."
                )
        if self.J <= 0:
            raise ValueError(f"J must be positive, got {self.J}.")
        if self.gamma0 < 0:
            raise ValueError(f"gamma0 must be >= 0, got {self.gamma0}.")
        if self.N_A < 1 or self.N_B < 1:
            raise ValueError(
                f"Ensembles need at least one atom, got N_A={self.N_A}, "
                f"N_B={self.N_B}."
            )
        if not 1 <= self.x_A < self.x_B <= self.N:
            raise ValueError(
                f"Sites must satisfy 1 <= x_A < x_B <= N, got x_A={self.x_A},"
                f" x_B={self.x_B}, N={self.N}."
            )
        if self.delta_x % 2:
            warnings.warn(
                f"Odd atomic distance {self.delta_x}: the round trip phase "
                "is an even multiple of pi.",
                PhaseConditionWarning,
                stacklevel=3
            )
        if self.t_max is not None:
            check_padding(self, self.t_max)

    @classmethod
    def for_duration(
        cls,
        t_max: float,
        delta_x: int = 10,
        J: float = 1.0,
        **kwargs
    ) -> CavityParams:
        """
        Size the lattice for a run of duration ``t_max``: the pair is
        centred with ``ceil(2 J t_max)`` free sites on either side, so the
        fastest photons cannot come back from the ends.

        :param t_max: Duration of the run.
        :param delta_x: Distance between the ensembles.
        :param J: Tunnelling strength.
        :param kwargs: Any other :class:`CavityParams` field.
        """
        padding = math.ceil(2 * J * t_max - 1e-9)
        x_A = padding + 1
        return cls(
            N=2 * padding + delta_x + 1,
            x_A=x_A,
            x_B=x_A + delta_x,
            J=J,
            t_max=t_max,
            **kwargs
        )

    @property
    def delta_x(self) -> int:
        """Distance between the ensembles, in sites."""
        return self.x_B - self.x_A

    @property
    def atoms(self) -> int:
        """Total number of atoms."""
        return self.N_A + self.N_B

    @property
    def dimension(self) -> int:
        """Size of the single excitation space."""
        return self.atoms + self.N

    @property
    def mirror_coupling(self) -> float:
        """Collective coupling ``sqrt(N_B) g_B`` of ensemble B."""
        return math.sqrt(self.N_B) * self.g_B


class InitialStateKind(str, Enum):
    """The initial states the lattice can be prepared in."""
    SINGLE_ATOM = "single_atom"
    SUPERRADIANT = "superradiant"
    PHOTON_WAVE_PACKET = "wave_packet"


@dataclass(frozen=True)
class InitialState:
    """
    An initial state: its kind and, for photon wave packets, the carrier
    wavenumber ``k0``, the momentum width ``sigma_k`` and the centre site
    (middle of the lattice when omitted).
    """
    kind: InitialStateKind = InitialStateKind.SINGLE_ATOM
    k0: float = math.pi / 2
    sigma_k: float = 0.1
    center: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", InitialStateKind(self.kind))
        if self.sigma_k <= 0:
            raise ValueError(f"sigma_k must be positive, got {self.sigma_k}.")


@dataclass(frozen=True)
class LatticeState:
    """Amplitudes of the atoms of both ensembles and of every resonator."""
    c_atoms_A: np.ndarray
    c_atoms_B: np.ndarray
    c_phot: np.ndarray

    @classmethod
    def from_vector(
        cls,
        params: CavityParams,
        vector: np.ndarray
    ) -> LatticeState:
        """Split a state vector ordered as ``[A, B, photons]``."""
        vector = np.asarray(vector, dtype=complex)
        if vector.shape != (params.dimension,):
            raise ValueError(
                f"Expected a vector of size {params.dimension}, "
                f"got {vector.shape}."
            )
        return cls(
            c_atoms_A=vector[:params.N_A],
            c_atoms_B=vector[params.N_A:params.atoms],
            c_phot=vector[params.atoms:],
        )

    @property
    def vector(self) -> np.ndarray:
        """The state vector ordered as ``[A, B, photons]``."""
        return np.concatenate((self.c_atoms_A, self.c_atoms_B, self.c_phot))

    @property
    def norm(self) -> float:
        """Euclidean norm of the state."""
        return float(np.linalg.norm(self.vector))


@dataclass(frozen=True)
class LatticeTrajectory:
    """Sampled lattice amplitudes, one row per time."""
    times: np.ndarray
    atoms_A: np.ndarray
    atoms_B: np.ndarray
    photons: np.ndarray

    @classmethod
    def from_states(
        cls,
        params: CavityParams,
        times: np.ndarray,
        states: np.ndarray
    ) -> LatticeTrajectory:
        """Split rows of state vectors into their blocks."""
        return cls(
            times=times,
            atoms_A=states[:, :params.N_A],
            atoms_B=states[:, params.N_A:params.atoms],
            photons=states[:, params.atoms:],
        )

    @property
    def population(self) -> np.ndarray:
        """Excited population of ensemble A, ``sum_j |c_{A,j}|^2``."""
        return np.sum(np.abs(self.atoms_A) ** 2, axis=1)

    @property
    def population_B(self) -> np.ndarray:
        """Excited population of ensemble B."""
        return np.sum(np.abs(self.atoms_B) ** 2, axis=1)

    @property
    def photon_distribution(self) -> np.ndarray:
        """``|c_x|^2`` for every time and site."""
        return np.abs(self.photons) ** 2

    @property
    def norm_squared(self) -> np.ndarray:
        """Total probability left in the single excitation space."""
        return self.population + self.population_B \
            + self.photon_distribution.sum(axis=1)

    @property
    def norm(self) -> np.ndarray:
        """Norm of the state at every time."""
        return np.sqrt(self.norm_squared)

    def state(self, index: int) -> LatticeState:
        """The full state at the ``index``-th sample."""
        return LatticeState(
            self.atoms_A[index], self.atoms_B[index], self.photons[index]
        )


def build_effective_hamiltonian(
    params: CavityParams,
    rotating_frame: bool = False
) -> sparse.csr_matrix:
    """
    Sparse effective Hamiltonian of the single excitation space.

    The photonic block is tridiagonal with ``omega_c`` on the diagonal and
    ``-J`` off it, atoms have ``omega_i - i gamma0/2`` on the diagonal and
    every atom of ensemble ``i`` couples with ``g_i`` to site ``x_i``. The
    matrix is complex symmetric.

    :param params: The lattice description.
    :param rotating_frame: Remove ``omega_c`` from the diagonal.
    :return: The Hamiltonian, of size :attr:`CavityParams.dimension`.
    """
    shift = params.omega_c if rotating_frame else 0.0
    n_a, n_b, atoms, n = params.N_A, params.N_B, params.atoms, params.N
    loss = -0.5j * params.gamma0

    diagonal = np.concatenate((
        np.full(n_a, params.omega_A - shift + loss),
        np.full(n_b, params.omega_B - shift + loss),
        np.full(n, params.omega_c - shift, dtype=complex),
    ))
    rows = [np.arange(params.dimension)]
    cols = [np.arange(params.dimension)]
    vals = [diagonal]

    sites = atoms + np.arange(n - 1)
    rows += [sites, sites + 1]
    cols += [sites + 1, sites]
    vals += [np.full(n - 1, -params.J, dtype=complex)] * 2

    for first, count, site, g in (
        (0, n_a, params.x_A, params.g_A),
        (n_a, n_b, params.x_B, params.g_B),
    ):
        members = first + np.arange(count)
        cavity = np.full(count, atoms + site - 1)
        rows += [members, cavity]
        cols += [cavity, members]
        vals += [np.full(count, g, dtype=complex)] * 2

    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(params.dimension, params.dimension)
    ).tocsr()


def initial_state(
    params: CavityParams,
    init: InitialStateKind | InitialState | str
) -> LatticeState:
    """
    Prepare a normalized initial state.

    * ``single_atom``: the first atom of ensemble A is excited;
    * ``superradiant``: ``1/sqrt(N_A)`` on every atom of ensemble A;
    * ``wave_packet``: a Gaussian photon packet
      ``exp(-(sigma_k (x - x0))^2 / 2 + i k0 x)``.
    """
    if not isinstance(init, InitialState):
        init = InitialState(kind=InitialStateKind(init))
    c_a = np.zeros(params.N_A, dtype=complex)
    c_b = np.zeros(params.N_B, dtype=complex)
    c_phot = np.zeros(params.N, dtype=complex)
    if init.kind is InitialStateKind.SINGLE_ATOM:
        c_a[0] = 1.0
    elif init.kind is InitialStateKind.SUPERRADIANT:
        c_a[:] = 1.0 / math.sqrt(params.N_A)
    else:
        center = params.N // 2 + 1 if init.center is None else init.center
        sites = np.arange(1, params.N + 1)
        c_phot = np.exp(
            -0.5 * (init.sigma_k * (sites - center)) ** 2
            + 1j * init.k0 * sites
        )
        c_phot /= np.linalg.norm(c_phot)
    return LatticeState(c_a, c_b, c_phot)


def check_padding(params: CavityParams, t_max: float) -> None:
    """
    Make sure the fastest photons, moving at ``2J``, cannot bounce off the
    lattice ends and reach the atoms within ``t_max``.

    :raises GuardError: If the padding is too short.
    """
    padding = min(params.x_A - 1, params.N - params.x_B)
    needed = 2 * params.J * t_max
    if padding < needed - 1e-9:
        raise GuardError(
            f"Causal padding guard: {padding} free sites around the atoms, "
            f"{math.ceil(needed)} needed for t_max={t_max} "
            f"(N >= {2 * math.ceil(needed) + params.delta_x + 1})."
        )


def evolve(
    params: CavityParams,
    init: InitialStateKind | InitialState | str,
    t_max: float,
    dt: float = 0.01,
    sample_every: int = 1
) -> LatticeTrajectory:
    """
    Integrate ``i d psi/dt = H psi`` with fourth-order Runge-Kutta steps in
    the frame rotating at ``omega_c``. The Hamiltonian is only applied as
    a sparse matrix-vector product.

    :param params: The lattice description.
    :param init: The initial state.
    :param t_max: Final time.
    :param dt: Time step, at most ``0.02 / J``.
    :param sample_every: Keep one sample every this many steps.
    :return: The sampled trajectory.
    :raises ValueError: If ``t_max`` or ``dt`` are not positive.
    :raises GuardError: If the step size, resource or causal padding
                        guards are violated.
    :raises DivergenceError: If non-finite amplitudes appear.
    """
    if not math.isfinite(dt) or dt <= 0:
        raise ValueError(f"The time step must be positive, got dt={dt}.")
    if not math.isfinite(t_max) or t_max <= 0:
        raise ValueError(f"t_max must be positive, got t_max={t_max}.")
    if dt > 0.02 / params.J * (1 + 1e-12):
        raise GuardError(
            f"Step size guard: dt={dt} exceeds 0.02/J={0.02 / params.J}."
        )
    if sample_every < 1:
        raise ValueError(f"sample_every must be >= 1, got {sample_every}.")
    n_steps = max(1, math.ceil(t_max / dt - 1e-9))
    if n_steps > MAX_STEPS:
        raise GuardError(
            f"Resource guard: {n_steps} steps exceed {MAX_STEPS}."
        )
    check_padding(params, t_max)

    generator = (-1j * build_effective_hamiltonian(params, True)).tocsr()
    psi = initial_state(params, init).vector
    n_samples = n_steps // sample_every + 1
    states = np.empty((n_samples, params.dimension), dtype=complex)
    states[0] = psi
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        k1 = generator @ psi
        k2 = generator @ (psi + half * k1)
        k3 = generator @ (psi + half * k2)
        k4 = generator @ (psi + dt * k3)
        psi = psi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % sample_every == 0:
            states[step // sample_every] = psi
    if not np.all(np.isfinite(states)):
        raise DivergenceError("Non-finite amplitudes in the lattice run.")
    times = np.arange(n_samples) * (dt * sample_every)
    logger.debug(
        "Lattice run N=%d dimension=%d: %d steps, %d samples",
        params.N, params.dimension, n_steps, n_samples
    )
    return LatticeTrajectory.from_states(params, times, states)


def exact_diag_oracle(
    params: CavityParams,
    init: InitialStateKind | InitialState | str,
    times: np.ndarray
) -> LatticeTrajectory:
    """
    Evolve by spectral synthesis, ``psi(t) = V e^{-i lambda t} V^-1 psi0``,
    in the same rotating frame as :func:`evolve`.

    :param params: The lattice description, at most 400 states.
    :param init: The initial state.
    :param times: The requested times.
    :return: The trajectory at ``times``.
    :raises ValueError: If the space is larger than
                        :data:`MAX_ORACLE_DIMENSION`.
    :raises DefectiveMatrixError: If the eigenvector matrix has a
                                  condition number above
                                  :data:`CONDITION_LIMIT`.
    """
    if params.dimension > MAX_ORACLE_DIMENSION:
        raise ValueError(
            f"Exact diagonalisation is limited to {MAX_ORACLE_DIMENSION} "
            f"states, got {params.dimension}."
        )
    hamiltonian = build_effective_hamiltonian(params, True).toarray()
    psi0 = initial_state(params, init).vector
    times = np.asarray(times, dtype=float)
    if params.gamma0 == 0:
        energies, vectors = eigh(hamiltonian)
        coefficients = vectors.conj().T @ psi0
    else:
        energies, vectors = eig(hamiltonian)
        condition = np.linalg.cond(vectors)
        if not condition <= CONDITION_LIMIT:
            raise DefectiveMatrixError(
                f"Eigenvector matrix condition number {condition:.3g} "
                f"exceeds {CONDITION_LIMIT:.0e}: the Hamiltonian is close "
                "to defective."
            )
        coefficients = solve(vectors, psi0)
    phases = np.exp(-1j * np.outer(times, energies))
    states = (phases * coefficients) @ vectors.T
    return LatticeTrajectory.from_states(params, times, states)


def round_trip_time(params: CavityParams) -> float:
    """
    Time for the fastest photons (group velocity ``2J``) to travel from A
    to B and back, ``2 dx / 2J``.
    """
    return params.delta_x / params.J


def round_trip_phase(params: CavityParams) -> float:
    """
    Phase accumulated by a resonant photon (``k = pi/2``) over one round
    trip between the ensembles, including the ``pi`` of the reflection
    off ensemble B. The interference is destructive when it is an odd
    multiple of ``pi``, i.e. for even distances.

    :return: ``pi dx + pi``.
    """
    if params.delta_x % 2:
        warnings.warn(
            f"Odd atomic distance {params.delta_x}: round trip phase "
            f"{params.delta_x + 1}pi is constructive.",
            PhaseConditionWarning,
            stacklevel=2
        )
    return math.pi * params.delta_x + math.pi


def dispersion(
    k: float | np.ndarray,
    J: float = 1.0,
    omega_c: float = 0.0
) -> float | np.ndarray:
    """Band of the resonator array, ``omega_c - 2J cos k``."""
    return omega_c - 2.0 * J * np.cos(k)


def group_velocity(
    k: float | np.ndarray,
    J: float = 1.0
) -> float | np.ndarray:
    """``d omega / dk = 2J sin k``."""
    return 2.0 * J * np.sin(k)


def momentum_distribution(
    photons: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """
    Photon probability in momentum space,
    ``|a_k|^2 = |N^-1/2 sum_x c_x e^{-ikx}|^2``.

    :param photons: Amplitudes, the last axis running over the sites.
    :return: Wavenumbers in ``[-pi, pi)`` and the matching probabilities.
    """
    photons = np.asarray(photons, dtype=complex)
    n = photons.shape[-1]
    amplitudes = np.fft.fft(photons, axis=-1) / math.sqrt(n)
    k = 2 * math.pi * np.fft.fftfreq(n)
    return np.fft.fftshift(k), np.fft.fftshift(
        np.abs(amplitudes) ** 2, axes=-1
    )


def mirror_reflection(
    params: CavityParams,
    k: float | np.ndarray
) -> complex | np.ndarray:
    """
    Reflection amplitude of ensemble B for a photon of wavenumber ``k``.
    The ensemble acts as a single site potential
    ``V = N_B g_B^2 / (omega_k - omega_B + i gamma0/2)``, so only the
    collective coupling ``sqrt(N_B) g_B`` matters, and

        r = V / (2iJ sin k - V).

    On resonance without loss the ensemble is a perfect mirror, ``r = -1``.
    """
    energy = dispersion(k, params.J)
    detuning = params.omega_B - params.omega_c - 0.5j * params.gamma0
    strength = params.mirror_coupling ** 2
    return strength / (
        2j * params.J * np.sin(k) * (energy - detuning) - strength
    )
