"""
Normalised second-order photon correlations of the scattered light and of the QD alone
"""

import logging

import numpy as np

from ..config import Config
from ..errors import UndefinedCorrelationError
from ..quantum.dynamics import CorrelatorSeries, two_time_correlator
from ..quantum.liouvillian import Liouvillian
from ..quantum.space import DensityMatrix, Operator, SystemOperators, expectation
from .polarization import PolarizationOps
from .scattering import two_photon_numerator

logger = logging.getLogger(__name__)

IMAGINARY_TOLERANCE = 1e-8


def _normalised(
    L: Liouvillian,
    rho_ss: DensityMatrix,
    lowering: Operator,
    raising: Operator,
    tau_grid: np.ndarray,
    label: str,
) -> CorrelatorSeries:
    intensity = expectation(rho_ss, raising @ lowering).real
    if intensity < Config.MIN_INTENSITY:
        raise UndefinedCorrelationError(f"{label} intensity {intensity:.3e} too small to normalise g2")

    numerator = two_time_correlator(
        L, rho_ss, [raising, lowering], [raising, lowering], tau_grid, labels=(label + "-", label + "-", label + "+", label + "+")
    )
    values = numerator.values / intensity**2

    residue = float(np.max(np.abs(values.imag)))
    scale = float(np.max(np.abs(values.real)))
    if residue > IMAGINARY_TOLERANCE * max(scale, 1.0):
        logger.warning(f"g2 of {label} has imaginary residue {residue:.2e}")

    return CorrelatorSeries(numerator.tau, values.real, labels=("g2", label))


def g2_scattered(L: Liouvillian, rho_ss: DensityMatrix, pol: PolarizationOps, tau_grid: np.ndarray) -> CorrelatorSeries:
    """
    g2(tau) = <P-(t) P-(t+tau) P+(t+tau) P+(t)> / <P- P+>^2

    Raises:
        UndefinedCorrelationError: I_s below 1e-30
    """
    return _normalised(L, rho_ss, pol.plus, pol.minus, tau_grid, "P")


def g2_incoherent(L: Liouvillian, rho_ss: DensityMatrix, ops: SystemOperators, tau_grid: np.ndarray) -> CorrelatorSeries:
    """
    g2 of the QD emission alone, normalised by <sigma^dag sigma>^2

    Raises:
        UndefinedCorrelationError: Exciton population below 1e-30
    """
    return _normalised(L, rho_ss, ops.sigma, ops.sigma_dag, tau_grid, "sigma")


def g2_zero(rho_ss: DensityMatrix, pol: PolarizationOps) -> float:
    """Equal-time g2 from the fourth moment on the steady state"""
    intensity = expectation(rho_ss, pol.minus @ pol.plus).real
    if intensity < Config.MIN_INTENSITY:
        raise UndefinedCorrelationError(f"scattering intensity {intensity:.3e} too small to normalise g2")
    return two_photon_numerator(rho_ss, pol) / intensity**2
