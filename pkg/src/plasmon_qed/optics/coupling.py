"""
QD-SP coupling constants and unit conversions

SI inside this module; everything handed to the quantum modules is in meV (energies),
nm (lengths) and e*nm (dipoles).
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..config import Config
from ..errors import ParameterError
from .quasi_mode import QuasiModeParams

logger = logging.getLogger(__name__)

NM = 1e-9
JOULE_PER_MEV = 1e-3 * Config.ELEMENTARY_CHARGE


def dipole_to_si(dipole_enm: float) -> float:
    """e*nm -> C*m"""
    return dipole_enm * Config.ELEMENTARY_CHARGE * NM


def dipole_to_internal(dipole_si: float) -> float:
    """C*m -> e*nm"""
    return dipole_si / (Config.ELEMENTARY_CHARGE * NM)


def field_to_internal(field_si: float) -> float:
    """V/m -> meV per (e*nm), so that dipole [e*nm] * field is an energy in meV"""
    return field_si * Config.ELEMENTARY_CHARGE * NM / JOULE_PER_MEV


def field_to_si(field_internal: float) -> float:
    """meV per (e*nm) -> V/m"""
    return field_internal * JOULE_PER_MEV / (Config.ELEMENTARY_CHARGE * NM)


def dipole_moment_debye(mu_enm: float) -> float:
    """QD dipole moment e*nm -> Debye"""
    return dipole_to_si(mu_enm) / Config.DEBYE_SI


@dataclass(frozen=True)
class GeometryParams:
    """QD-MNP geometry: distance and radius [nm], polarization factor, QD dipole [e*nm]"""

    R_nm: float
    r_m_nm: float
    s_alpha: int = 2
    mu_enm: float = 0.7

    def __post_init__(self):
        if not self.r_m_nm > 0:
            raise ParameterError(f"MNP radius must be positive, got {self.r_m_nm} nm")
        if not self.R_nm > self.r_m_nm:
            raise ParameterError(f"QD must sit outside the sphere: R = {self.R_nm} nm <= r_m = {self.r_m_nm} nm")
        if self.s_alpha not in (2, -1):
            raise ParameterError(f"s_alpha must be 2 (parallel) or -1 (orthogonal), got {self.s_alpha}")
        if not self.mu_enm > 0:
            raise ParameterError(f"dipole moment must be positive, got {self.mu_enm} e*nm")


@dataclass(frozen=True)
class CouplingConstants:
    """QD-SP coupling g [meV], SP dipole chi [C*m], vacuum field at the QD [V/m], QD dipole mu [C*m]"""

    g: float
    chi: float
    field: float
    mu: float

    @property
    def chi_over_mu(self) -> float:
        """SP-to-QD dipole ratio; SP drive chi*E0 = chi_over_mu * Omega / 2"""
        return self.chi / self.mu

    @property
    def field_internal(self) -> float:
        return field_to_internal(self.field)

    @property
    def chi_internal(self) -> float:
        return dipole_to_internal(self.chi)


def coupling_constants(geo: GeometryParams, q: QuasiModeParams) -> CouplingConstants:
    """
    Vacuum field amplitude, SP polarization coefficient and QD-SP coupling

    field = (s_alpha / R^3) sqrt(3 hbar eta r_m^3 / (4 pi eps0))
    chi   = eps_b sqrt(12 pi hbar eta eps0 r_m^3)
    g     = mu * field

    Args:
        geo: Geometry
        q: SP quasi-mode

    Returns:
        CouplingConstants (g in meV, chi/field/mu in SI)
    """
    hbar_eta = q.eta * JOULE_PER_MEV
    r_m = geo.r_m_nm * NM
    distance = geo.R_nm * NM

    field = geo.s_alpha / distance**3 * np.sqrt(3.0 * hbar_eta * r_m**3 / (4.0 * np.pi * Config.EPSILON_0))
    chi = q.eps_b * np.sqrt(12.0 * np.pi * hbar_eta * Config.EPSILON_0 * r_m**3)
    mu = dipole_to_si(geo.mu_enm)
    g = geo.mu_enm * field_to_internal(field)

    logger.debug(f"Coupling at R = {geo.R_nm} nm: g = {g:.4f} meV, chi/mu = {chi / mu:.3f}, field = {field:.4e} V/m")
    return CouplingConstants(g=float(g), chi=float(chi), field=float(field), mu=float(mu))


def effective_qd_damping(g: float, q: QuasiModeParams, omega: float) -> float:
    """MNP-induced QD damping g^2 gamma_sp / ((gamma_sp/2)^2 + (omega_sp - omega)^2) [meV]"""
    return g**2 * q.gamma_sp / ((q.gamma_sp / 2.0) ** 2 + (q.omega_sp - omega) ** 2)


def local_field_factor(coupling: CouplingConstants, q: QuasiModeParams, omega: float) -> complex:
    """Linear-response enhancement of the drive felt by the QD: 1 - g chi/mu / (i(omega_sp - omega) + gamma_sp/2)"""
    return 1.0 - coupling.g * coupling.chi_over_mu / (1j * (q.omega_sp - omega) + q.gamma_sp / 2.0)
