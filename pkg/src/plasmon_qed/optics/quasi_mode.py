"""
Lorentzian quasi-mode reduction of the MNP dipole response
"""

import logging
from dataclasses import dataclass

from ..errors import ModelViolationError, ParameterError
from .permittivity import PermittivityTable, find_sp_resonance, permittivity, permittivity_slope

logger = logging.getLogger(__name__)

MEV_PER_EV = 1000.0


@dataclass(frozen=True)
class QuasiModeParams:
    """SP quasi-mode: resonance, linewidth and inverse slope, all in meV"""

    omega_sp: float
    gamma_sp: float
    eta: float
    eps_b: float

    def __post_init__(self):
        if not self.gamma_sp > 0:
            raise ParameterError(f"gamma_sp must be positive, got {self.gamma_sp}")
        if not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")
        if not self.eps_b > 0:
            raise ParameterError(f"eps_b must be positive, got {self.eps_b}")


def quasi_mode_params(table: PermittivityTable, eps_b: float) -> QuasiModeParams:
    """
    Derive omega_sp, eta and gamma_sp from the tabulated permittivity

    eta is the inverse of the interpolant's analytic slope at omega_sp and
    gamma_sp = 2 eta Im eps_m(omega_sp).

    Args:
        table: Metal permittivity table
        eps_b: Background permittivity

    Returns:
        QuasiModeParams in meV

    Raises:
        NoResonanceError: No SP resonance inside the table
        ModelViolationError: Non-positive slope or lossless metal at omega_sp
    """
    omega_sp_ev = find_sp_resonance(table, eps_b)
    slope = permittivity_slope(table, omega_sp_ev)
    if not slope > 0:
        raise ModelViolationError(
            f"d Re eps_m / d omega = {slope:.4g} /eV at {omega_sp_ev:.4f} eV; quasi-mode reduction needs a positive slope"
        )

    eta_ev = 1.0 / slope
    eps_im = permittivity(table, omega_sp_ev).imag
    gamma_sp_ev = 2.0 * eta_ev * eps_im
    if not gamma_sp_ev > 0:
        raise ModelViolationError(f"Im eps_m = {eps_im:.4g} at omega_sp; a lossless SP mode has no quasi-mode linewidth")

    params = QuasiModeParams(
        omega_sp=MEV_PER_EV * omega_sp_ev,
        gamma_sp=MEV_PER_EV * gamma_sp_ev,
        eta=MEV_PER_EV * eta_ev,
        eps_b=eps_b,
    )
    logger.info(
        f"SP quasi-mode: omega_sp = {params.omega_sp:.3f} meV, gamma_sp = {params.gamma_sp:.3f} meV, "
        f"eta = {params.eta:.3f} meV (eps_b = {eps_b})"
    )
    return params


def beta_lorentzian(omega: float, q: QuasiModeParams) -> complex:
    """Lorentzian MNP response 3i eps_b eta / (i(omega_sp - omega) + gamma_sp/2), omega in meV"""
    return 3j * q.eps_b * q.eta / (1j * (q.omega_sp - omega) + q.gamma_sp / 2.0)


def beta_exact(table: PermittivityTable, omega: float, eps_b: float) -> complex:
    """Un-approximated MNP response (eps_m - eps_b) / (2 eps_b + eps_m), omega in meV"""
    eps_m = permittivity(table, omega / MEV_PER_EV)
    return (eps_m - eps_b) / (2.0 * eps_b + eps_m)
