"""
Mean-field equations of motion for <a>, <sigma> and the exciton population

Steady state at fixed population n solves the 2x2 linear system

    A <a> - g <sigma>         = i chi E0
    g w <a> + X <sigma>       = i (Omega/2) w

with A = i(w_sp - w) + gamma_sp/2, X = i(w_x - w) + gamma_x/2 and inversion
w = 1 - 2n. The weak-drive response is the n = 0 case.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..config import Config
from ..errors import MeanFieldConvergenceError, NumericalDegeneracyError
from ..quantum.liouvillian import SystemParams

logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-300


@dataclass(frozen=True)
class MeanFieldState:
    """Mean-field amplitudes and population at drive frequency omega_i [meV]"""

    omega_i: float
    a: complex
    sigma: complex
    population: float
    intensity: float
    iterations: int = 0
    residual: float = 0.0

    @property
    def physical(self) -> bool:
        return abs(self.sigma) ** 2 <= self.population + 1e-12 and 0.0 <= self.population <= 1.0


def _linear_solve(p: SystemParams, omega: float, inversion: float) -> Tuple[complex, complex]:
    A = 1j * (p.omega_sp - omega) + 0.5 * p.gamma_sp
    X = 1j * (p.omega_x - omega) + 0.5 * p.gamma_x
    matrix = np.array([[A, -p.g], [p.g * inversion, X]], dtype=complex)
    rhs = np.array([1j * p.sp_drive, 1j * p.qd_drive * inversion], dtype=complex)

    if abs(np.linalg.det(matrix)) < DEGENERACY_TOLERANCE:
        raise NumericalDegeneracyError(f"linear-response system singular at omega = {omega} meV")
    try:
        a, sigma = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise NumericalDegeneracyError(f"linear-response system singular at omega = {omega} meV: {e}") from e
    return complex(a), complex(sigma)


def _pumping(p: SystemParams, a: complex, sigma: complex, inversion: float) -> float:
    """
    Population pumping per unit inversion [meV]

    Raises:
        MeanFieldConvergenceError: Zero inversion or non-finite amplitudes
    """
    if inversion == 0.0:
        raise MeanFieldConvergenceError("mean-field pumping undefined at zero inversion", math.inf)
    rate = (-2.0 * p.g * (np.conj(a) * sigma).real + 2.0 * p.qd_drive * sigma.imag) / inversion
    if not math.isfinite(rate):
        raise MeanFieldConvergenceError(f"mean-field pumping not finite (a = {a}, sigma = {sigma})", math.inf)
    return float(rate)


def _population(p: SystemParams, a: complex, sigma: complex, inversion: float) -> float:
    rate = _pumping(p, a, sigma, inversion)
    denominator = p.gamma_x + 2.0 * rate
    if denominator == 0.0:
        raise MeanFieldConvergenceError(f"mean-field population undefined at pumping {rate} meV", math.inf)
    return rate / denominator


def _intensity(p: SystemParams, a: complex, sigma: complex) -> float:
    amplitude = 0j
    if p.drive.drive_sp:
        amplitude += p.coupling.chi_over_mu * a
    if p.drive.drive_qd:
        amplitude += sigma
    return abs(amplitude) ** 2


def weak_drive_response(p: SystemParams, omega_i: Optional[float] = None) -> MeanFieldState:
    """
    Linear response of the molecule (exciton population neglected)

    Valid for Omega below about 1e-3 meV; the caller picks the drive.

    Args:
        p: System parameters
        omega_i: Drive frequency [meV]; defaults to p.drive.omega_i

    Returns:
        MeanFieldState with I_coh = |(chi/mu) <a> + <sigma>|^2 in mu^2 units

    Raises:
        NumericalDegeneracyError: Singular 2x2 system
        MeanFieldConvergenceError: Non-finite amplitudes
    """
    omega = p.drive.omega_i if omega_i is None else omega_i
    a, sigma = _linear_solve(p, omega, 1.0)
    return MeanFieldState(
        omega_i=omega,
        a=a,
        sigma=sigma,
        population=_population(p, a, sigma, 1.0),
        intensity=_intensity(p, a, sigma),
    )


def mean_field_steady_state(
    p: SystemParams,
    omega_i: Optional[float] = None,
    damping: float = Config.MEAN_FIELD_DAMPING,
    max_iterations: int = Config.MEAN_FIELD_MAX_ITERATIONS,
    tol: float = Config.MEAN_FIELD_TOLERANCE,
) -> MeanFieldState:
    """
    Saturated steady state of the factorised equations by damped fixed-point iteration

    The population is iterated as n <- (1 - d) n + d n'(n), where n'(n) solves the
    linear system at inversion 1 - 2n and balances pumping against gamma_x decay.

    Args:
        p: System parameters
        omega_i: Drive frequency [meV]; defaults to p.drive.omega_i
        damping: Mixing weight d of the new population
        max_iterations: Iteration budget
        tol: Fixed-point residual on the population

    Returns:
        MeanFieldState

    Raises:
        MeanFieldConvergenceError: Budget exhausted (last residual attached) or non-finite amplitudes
    """
    omega = p.drive.omega_i if omega_i is None else omega_i
    population = 0.0
    residual = np.inf

    for iteration in range(1, max_iterations + 1):
        inversion = 1.0 - 2.0 * population
        a, sigma = _linear_solve(p, omega, inversion)
        target = _population(p, a, sigma, inversion)
        residual = abs(target - population)
        if residual < tol:
            population = target
            inversion = 1.0 - 2.0 * population
            a, sigma = _linear_solve(p, omega, inversion)
            logger.debug(f"Mean field at {omega:.4f} meV converged in {iteration} iterations (n = {population:.6e})")
            return MeanFieldState(
                omega_i=omega,
                a=a,
                sigma=sigma,
                population=population,
                intensity=_intensity(p, a, sigma),
                iterations=iteration,
                residual=residual,
            )
        population = (1.0 - damping) * population + damping * target

    raise MeanFieldConvergenceError(
        f"mean-field iteration at omega_i = {omega:.4f} meV not converged after {max_iterations} iterations", residual
    )


def mnp_only_intensity(p: SystemParams, omega_i: Optional[float] = None) -> float:
    """Scattering of the driven MNP alone, |(chi/mu) chi E0 / A|^2 [mu^2]"""
    return weak_drive_response(p.mnp_only(), omega_i).intensity


def sp_amplitude_rate(p: SystemParams, a: complex, sigma: complex) -> complex:
    """d<a>/dt [1/ps] from the SP equation of motion, exact for any state"""
    A = 1j * (p.omega_sp - p.drive.omega_i) + 0.5 * p.gamma_sp
    return (-A * a + p.g * sigma + 1j * p.sp_drive) / Config.HBAR_MEV_PS
