"""
Poles of the antisymmetric two-atom amplitude. Laplace transforming

    dc/dt = -gamma/2 · c(t) + a · c(t - T),    a = gamma beta / 2,

gives the characteristic equation ``s + gamma/2 = a e^{-sT}``, whose
solutions are ``s = W_k(a T e^{gamma T / 2}) / T - gamma/2`` on the
branches ``k`` of the Lambert W function. The rightmost root sets the
long time decay rate.
"""
from __future__ import annotations
import cmath
import math
import logging
from dataclasses import dataclass
from .errors import ConvergenceError
from .two_atom import TwoAtomParams


__all__ = [
    "DEFAULT_BRANCHES",
    "CharacteristicRoot",
    "lambertw",
    "branch_order",
    "characteristic_roots",
    "dominant_decay_rate",
    "spectral_rate",
    "asymptotic_rate",
]

logger = logging.getLogger(__name__)

DEFAULT_BRANCHES = 5
_BRANCH_POINT = -math.exp(-1)
_MAX_LOG_ARGUMENT = 700.0


@dataclass(frozen=True)
class CharacteristicRoot:
    """
    A root of the characteristic equation.

    :param s: The complex root.
    :param branch: The Lambert W branch it comes from.
    :param residual: ``|s + gamma/2 - a e^{-sT}|`` at the root.
    """
    s: complex
    branch: int
    residual: float

    @property
    def rate(self) -> float:
        """The population decay rate ``-2 Re s`` of this pole."""
        return -2.0 * self.s.real


def _seed(z: complex, k: int) -> complex:
    if k == 0:
        if abs(z) < 0.25:
            return z - z * z + 1.5 * z ** 3
        if abs(z - _BRANCH_POINT) <= 1.5:
            return cmath.sqrt(2.0 * (math.e * z + 1.0)) - 1.0
        log_z = cmath.log(z)
        return log_z - cmath.log(log_z)
    l1 = cmath.log(z) + 2j * math.pi * k
    l2 = cmath.log(l1)
    return l1 - l2 + l2 / l1


def lambertw(
    z: complex,
    k: int = 0,
    tol: float = 1e-15,
    max_iter: int = 100
) -> complex:
    """
    Branch ``k`` of the Lambert W function, the solution of
    ``w e^w = z``. The iteration starts from a series or asymptotic seed
    and converges with Halley's method.

    :param z: The argument.
    :param k: The branch index.
    :param tol: Relative step size at which the iteration stops.
    :param max_iter: Maximum number of Halley steps.
    :return: ``W_k(z)``.
    :raises ValueError: For ``z = 0`` on a branch other than the principal.
    :raises ConvergenceError: If Halley's method does not converge.
    """
    z = complex(z)
    if z == 0:
        if k == 0:
            return 0j
        raise ValueError(f"W_{k}(0) is not finite.")
    w = _seed(z, k)
    dw = complex("inf")
    for _ in range(max_iter):
        ew = cmath.exp(w)
        f = w * ew - z
        w1 = w + 1.0
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        if abs(dw) <= tol * (1.0 + abs(w)):
            return w
    if abs(dw) <= 1e-10 * (1.0 + abs(w)):
        logger.debug("W_%d(%r) stopped at |dw|=%g", k, z, abs(dw))
        return w
    raise ConvergenceError(
        f"Lambert W branch {k} at z={z} did not converge in {max_iter} "
        f"iterations (last step {abs(dw):.3g})."
    )


def branch_order(count: int) -> list[int]:
    """The first ``count`` branch indices in the order 0, -1, 1, -2, 2..."""
    order = []
    k = 0
    while len(order) < count:
        if k == 0:
            order.append(0)
        else:
            order.extend((-k, k))
        k += 1
    return order[:count]


def _newton(
    s: complex,
    half: float,
    a: float,
    T: float,
    max_iter: int = 100
) -> complex:
    for _ in range(max_iter):
        decay = a * cmath.exp(-s * T)
        f = s + half - decay
        ds = f / (1.0 + T * decay)
        s -= ds
        if abs(ds) <= 1e-14 * max(1.0, abs(s)):
            return s
    raise ConvergenceError(
        f"Newton refinement of the root near s={s} did not converge in "
        f"{max_iter} steps."
    )


def _branch_value(log_z: float, k: int) -> complex:
    # W_k(e^log_z); past the float range only the log expansion is used
    if log_z <= _MAX_LOG_ARGUMENT:
        return lambertw(math.exp(log_z), k)
    l1 = complex(log_z, 2.0 * math.pi * k)
    l2 = cmath.log(l1)
    return l1 - l2 + l2 / l1


def characteristic_roots(
    params: TwoAtomParams,
    n_branches: int = DEFAULT_BRANCHES
) -> list[CharacteristicRoot]:
    """
    Compute the roots of ``s + gamma/2 = (gamma beta/2) e^{-sT}`` on the
    first ``n_branches`` Lambert W branches, refined with Newton's method
    on the characteristic function.

    :param params: The physical parameters; ``phi`` must be 0.
    :param n_branches: Number of branches to evaluate.
    :return: The roots, sorted by descending real part. Without delay or
             without coupling a single root is returned.
    :raises ValueError: If ``phi != 0`` or ``n_branches < 1``.
    :raises ConvergenceError: If a root cannot be refined.
    """
    if not params.zero_phase:
        raise ValueError(
            f"Characteristic roots are implemented for phi = 0 only, "
            f"got phi={params.phase_phi}."
        )
    if n_branches < 1:
        raise ValueError(f"n_branches must be >= 1, got {n_branches}.")
    half = 0.5 * params.gamma
    a = 0.5 * params.gamma1d
    T = params.T
    if a == 0:
        return [CharacteristicRoot(complex(-half), 0, 0.0)]
    if T == 0:
        return [CharacteristicRoot(complex(-(half - a)), 0, 0.0)]

    log_z = math.log(a * T) + half * T
    roots = []
    for k in branch_order(n_branches):
        s = _branch_value(log_z, k) / T - half
        s = _newton(s, half, a, T)
        residual = abs(s + half - a * cmath.exp(-s * T))
        roots.append(CharacteristicRoot(s, k, residual))
    roots.sort(key=lambda root: -root.s.real)
    logger.debug("Principal root for %r: %r", params, roots[0].s)
    return roots


def dominant_decay_rate(roots: list[CharacteristicRoot]) -> float:
    """
    The long time population decay rate ``-2 max Re s``.

    :raises ValueError: If ``roots`` is empty.
    """
    if not roots:
        raise ValueError("At least one root is required.")
    return -2.0 * max(root.s.real for root in roots)


def spectral_rate(
    params: TwoAtomParams,
    n_branches: int = DEFAULT_BRANCHES
) -> float:
    """Shorthand for the dominant decay rate of ``params``."""
    return dominant_decay_rate(characteristic_roots(params, n_branches))


def asymptotic_rate(params: TwoAtomParams) -> float:
    """
    Small retardation estimate of the suppressed rate,
    ``gamma0 / (1 + gamma1d T / 2)``.
    """
    return params.gamma0 / (1.0 + 0.5 * params.gamma1d * params.T)
