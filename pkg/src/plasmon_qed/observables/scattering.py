"""
Rayleigh scattering intensity and its coherent/incoherent split
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from ..quantum.dynamics import steady_state, steady_state_residual
from ..quantum.liouvillian import SystemParams, build_system_liouvillian
from ..quantum.space import DensityMatrix, HilbertSpace, build_system_operators, expectation
from .polarization import PolarizationOps, polarization_for

logger = logging.getLogger(__name__)

NEGATIVITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ScatteringResult:
    """Steady-state scattering intensities [mu^2] at drive frequency omega_i [meV]"""

    omega_i: float
    I_s: float
    I_coh: float
    I_incoh: float
    params: Optional[SystemParams] = None
    residual: float = 0.0


def scattering_intensities(
    rho_ss: DensityMatrix, pol: PolarizationOps, omega_i: float = 0.0, params: Optional[SystemParams] = None
) -> ScatteringResult:
    """
    I_s = <P- P+>, I_coh = |<P+>|^2 and I_incoh = I_s - I_coh

    Args:
        rho_ss: Steady state
        pol: Polarization operators
        omega_i: Drive frequency recorded on the result [meV]
        params: Parameter snapshot recorded on the result

    Returns:
        ScatteringResult
    """
    I_s = expectation(rho_ss, pol.minus @ pol.plus).real
    I_coh = abs(expectation(rho_ss, pol.plus)) ** 2
    I_incoh = I_s - I_coh

    floor = -NEGATIVITY_TOLERANCE * max(1.0, I_s)
    if I_s < floor or I_incoh < floor:
        logger.warning(f"Negative scattering intensity at omega_i = {omega_i:.4f} meV: I_s = {I_s:.3e}, I_incoh = {I_incoh:.3e}")
    return ScatteringResult(omega_i=omega_i, I_s=I_s, I_coh=I_coh, I_incoh=I_incoh, params=params)


def two_photon_numerator(rho_ss: DensityMatrix, pol: PolarizationOps) -> float:
    """<P- P- P+ P+> on the steady state"""
    return expectation(rho_ss, pol.minus @ pol.minus @ pol.plus @ pol.plus).real


def solve_scattering(p: SystemParams, n_max: int) -> Tuple[DensityMatrix, ScatteringResult]:
    """Steady state and scattering intensities of p on a Fock cutoff n_max"""
    space = HilbertSpace(n_max)
    ops = build_system_operators(space)
    L = build_system_liouvillian(p, space, ops)
    rho = steady_state(L)
    result = scattering_intensities(rho, polarization_for(p, ops), p.drive.omega_i, p)
    return rho, replace(result, residual=steady_state_residual(L, rho))
