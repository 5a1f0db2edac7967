"""
Steady states, time propagation and two-time correlators of the Lindblad generator
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, LinAlgWarning, expm, solve

from ..config import Config
from ..errors import (
    ConvergenceError,
    DimensionError,
    FockCutoffError,
    GridError,
    NonUniqueSteadyStateError,
    StiffnessError,
)
from ..optics.coupling import effective_qd_damping
from .liouvillian import Liouvillian, SystemParams, trace_functional, unvectorize, vectorize
from .space import DensityMatrix, HilbertSpace, Operator, validate_density_matrix

logger = logging.getLogger(__name__)

GRID_UNIFORMITY = 1e-9


@dataclass(frozen=True, eq=False)
class CorrelatorSeries:
    """Two-time correlator sampled on a uniform, nonnegative delay grid [ps]"""

    tau: np.ndarray
    values: np.ndarray
    labels: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        tau = np.array(self.tau, dtype=float)
        values = np.array(self.values)
        _check_tau_grid(tau)
        if values.shape != tau.shape:
            raise DimensionError(f"{values.size} correlator values for {tau.size} delays")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.tau)

    @property
    def step(self) -> float:
        return float(self.tau[1] - self.tau[0])

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def value_at(self, tau: float) -> complex:
        """Linearly interpolated value at delay tau"""
        if not self.tau[0] <= tau <= self.tau[-1]:
            raise GridError(f"delay {tau} ps outside [{self.tau[0]}, {self.tau[-1]}] ps")
        re = np.interp(tau, self.tau, self.values.real)
        im = np.interp(tau, self.tau, np.imag(self.values))
        return complex(re, im)

    def scaled(self, factor: complex, labels: Optional[Tuple[str, ...]] = None) -> "CorrelatorSeries":
        return CorrelatorSeries(self.tau, self.values * factor, labels if labels is not None else self.labels)


def _check_tau_grid(tau: np.ndarray) -> None:
    if tau.ndim != 1 or len(tau) < 2:
        raise GridError("delay grid needs at least two points")
    if not np.all(np.isfinite(tau)):
        raise GridError("delay grid contains non-finite values")
    if tau[0] != 0.0:
        raise GridError(f"delay grid must start at 0, starts at {tau[0]}")
    steps = np.diff(tau)
    if np.any(steps <= 0):
        raise GridError("delay grid must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > GRID_UNIFORMITY * steps[0] * len(tau):
        raise GridError("delay grid must be uniform")


def steady_state_residual(L: Liouvillian, rho: DensityMatrix) -> float:
    """max |L(rho)| [1/ps]"""
    return float(np.max(np.abs(L.generator @ vectorize(rho.matrix))))


def steady_state(L: Liouvillian) -> DensityMatrix:
    """
    Solve L(rho) = 0 with Tr rho = 1

    The first row of the generator is replaced with the trace functional and the
    bordered system is solved directly.

    Args:
        L: Lindblad generator

    Returns:
        Steady-state DensityMatrix

    Raises:
        NonUniqueSteadyStateError: Bordered system is singular
        ConvergenceError: Residual or density-matrix invariants out of tolerance
    """
    space = L.space
    bordered = np.array(L.generator, dtype=complex)
    bordered[0, :] = trace_functional(space)
    rhs = np.zeros(bordered.shape[0], dtype=complex)
    rhs[0] = 1.0

    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            solution = solve(bordered, rhs)
        except (LinAlgError, LinAlgWarning) as e:
            raise NonUniqueSteadyStateError(f"bordered steady-state system is singular: {e}") from e

    rho = DensityMatrix(space, unvectorize(solution, space.dim)).hermitized()
    residual = steady_state_residual(L, rho)
    scale = max(1.0, float(np.max(np.abs(L.generator))))
    if residual > Config.STEADY_STATE_TOLERANCE * scale:
        raise ConvergenceError("steady-state residual above tolerance", residual)

    diagnostics = validate_density_matrix(rho)
    if not diagnostics.valid:
        raise ConvergenceError(f"steady state is not a density matrix ({diagnostics.describe()})", residual)

    logger.debug(f"Steady state on n_max = {space.n_max}: residual {residual:.2e}, {diagnostics.describe()}")
    return rho


def _rk4_step(generator: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    k1 = generator @ v
    k2 = generator @ (v + 0.5 * h * k1)
    k3 = generator @ (v + 0.5 * h * k2)
    k4 = generator @ (v + h * k3)
    return v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _integrate(generator: np.ndarray, v: np.ndarray, duration: float, max_step: float) -> Tuple[np.ndarray, int]:
    """
    RK4 with step doubling: each step is accepted when one full step and two half
    steps agree to the per-step tolerance, otherwise the step is halved.
    """
    elapsed = 0.0
    steps = 0
    h = max_step
    while elapsed < duration:
        h = min(h, duration - elapsed)
        full = _rk4_step(generator, v, h)
        half = _rk4_step(generator, _rk4_step(generator, v, 0.5 * h), 0.5 * h)
        error = float(np.max(np.abs(full - half)))

        if error > Config.RK4_STEP_TOLERANCE:
            h *= 0.5
            if h < Config.RK4_MIN_STEP_PS:
                raise StiffnessError(
                    f"step size fell below {Config.RK4_MIN_STEP_PS:.1e} ps at t = {elapsed:.4g} ps; "
                    f"reduce the Fock cutoff or rescale the rates"
                )
            continue

        v = half
        elapsed += h
        steps += 1
        h = min(2.0 * h, max_step)
    return v, steps


def _max_step(L: Liouvillian, max_step: Optional[float]) -> float:
    h = Config.RK4_STEP_FRACTION * Config.HBAR_MEV_PS / L.energy_scale
    return h if max_step is None else min(h, max_step)


def evolve(L: Liouvillian, rho0: DensityMatrix, t: float, max_step: Optional[float] = None) -> DensityMatrix:
    """
    Propagate rho0 for a duration t [ps]

    Args:
        L: Lindblad generator
        rho0: Initial state
        t: Duration [ps], t >= 0
        max_step: Upper bound on the step size [ps]

    Returns:
        rho(t)

    Raises:
        StiffnessError: Step size underflow
    """
    if t < 0:
        raise GridError(f"propagation time must be >= 0, got {t}")
    if rho0.space != L.space:
        raise DimensionError(f"state on n_max={rho0.space.n_max}, generator on n_max={L.space.n_max}")
    if t == 0:
        return rho0

    v, steps = _integrate(L.generator, vectorize(rho0.matrix), t, _max_step(L, max_step))
    logger.debug(f"Propagated {t:.4g} ps in {steps} steps")
    return DensityMatrix(L.space, unvectorize(v, L.space.dim))


def _product(operators: Sequence[Operator], space: HilbertSpace) -> np.ndarray:
    result = np.eye(space.dim, dtype=complex)
    for op in operators:
        if op.space != space:
            raise DimensionError(f"operator on n_max={op.space.n_max}, generator on n_max={space.n_max}")
        result = result @ op.matrix
    return result


def two_time_correlator(
    L: Liouvillian,
    rho_ss: DensityMatrix,
    left: Sequence[Operator],
    right: Sequence[Operator],
    tau_grid: np.ndarray,
    labels: Tuple[str, ...] = (),
    max_step: Optional[float] = None,
) -> CorrelatorSeries:
    """
    Two-time correlator by the quantum regression theorem

    left = [A] gives <A(t) B(t+tau)> with M(0) = rho A; left = [A, C] gives
    <A(t) B(t+tau) C(t)> with M(0) = C rho A. B is the product of the right
    operators. M is propagated with the same generator and Tr[B M(tau)] returned.

    Args:
        L: Lindblad generator
        rho_ss: Steady state of L
        left: [A] or [A, C]
        right: Operators whose product is B
        tau_grid: Uniform delays starting at 0 [ps]
        labels: Operator labels stored on the series
        max_step: Upper bound on the RK4 step [ps]

    Returns:
        CorrelatorSeries
    """
    tau = np.asarray(tau_grid, dtype=float)
    _check_tau_grid(tau)
    space = L.space
    if rho_ss.space != space:
        raise DimensionError(f"state on n_max={rho_ss.space.n_max}, generator on n_max={space.n_max}")
    if len(left) == 1:
        start = rho_ss.matrix @ _product(left, space)
    elif len(left) == 2:
        start = left[1].matrix @ rho_ss.matrix @ _product(left[:1], space)
    else:
        raise DimensionError(f"expected one or two left operators, got {len(left)}")

    observable = _product(right, space).reshape(-1)
    v = vectorize(start)
    values = np.empty(len(tau), dtype=complex)
    values[0] = observable @ v
    dtau = float(tau[1] - tau[0])

    if len(tau) > Config.EXPM_THRESHOLD:
        propagator = expm(L.generator * dtau)
        for k in range(1, len(tau)):
            v = propagator @ v
            values[k] = observable @ v
    else:
        h = _max_step(L, max_step)
        for k in range(1, len(tau)):
            v, _ = _integrate(L.generator, v, dtau, h)
            values[k] = observable @ v

    return CorrelatorSeries(tau, values, labels)


def default_tau_grid(
    p: SystemParams, points: int = Config.CORRELATOR_POINTS, span: float = Config.CORRELATOR_SPAN
) -> np.ndarray:
    """Uniform grid of `points` delays over span * hbar / min(gamma_x + Gamma'(omega_x), gamma_sp)"""
    slowest = min(p.gamma_x + effective_qd_damping(p.g, p.quasi_mode, p.omega_x), p.gamma_sp)
    tau_max = span * Config.HBAR_MEV_PS / slowest
    return np.linspace(0.0, tau_max, points)


def recovery_time(series: CorrelatorSeries, band: float = 0.2) -> float:
    """
    First delay after which a normalised correlation stays within 1 +- band [ps]

    Returns inf when the series is still outside the band at its last point.
    """
    outside = np.flatnonzero(np.abs(series.real - 1.0) > band)
    if len(outside) == 0:
        return float(series.tau[0])
    last = int(outside[-1])
    if last == len(series) - 1:
        return math.inf
    return float(series.tau[last + 1])


def converge_fock_cutoff(
    p: SystemParams,
    observable: Callable[[SystemParams, HilbertSpace], float],
    tol: float = Config.FOCK_TOLERANCE,
    start: int = Config.FOCK_START,
    cap: int = Config.FOCK_CAP,
) -> Tuple[int, float]:
    """
    Double the Fock cutoff until an observable stops changing

    Args:
        p: System parameters
        observable: Function of (params, space) returning a real number
        tol: Relative change between consecutive cutoffs
        start: Initial cutoff
        cap: Largest cutoff tried

    Returns:
        (smaller converged cutoff, its value)

    Raises:
        FockCutoffError: No convergence up to the cap
    """
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")

    n_max = start
    value = float(observable(p, HilbertSpace(n_max)))
    while 2 * n_max <= cap:
        refined = float(observable(p, HilbertSpace(2 * n_max)))
        change = abs(refined - value) / max(abs(refined), abs(value), np.finfo(float).tiny)
        logger.debug(f"Fock cutoff {n_max} -> {2 * n_max}: relative change {change:.3e}")
        if change < tol or refined == value:
            logger.info(f"Fock cutoff converged at n_max = {n_max} (relative change {change:.2e})")
            return n_max, value
        n_max, value = 2 * n_max, refined

    raise FockCutoffError(f"observable not converged to {tol:.1e} below Fock cutoff cap {cap}")
