"""
Total polarization operator of the hybrid molecule in units of the QD dipole
"""

from dataclasses import dataclass

from ..optics.coupling import CouplingConstants
from ..quantum.liouvillian import SystemParams
from ..quantum.space import Operator, SystemOperators


@dataclass(frozen=True)
class PolarizationOps:
    """
    P+ / mu = (chi/mu) a + sigma and its adjoint

    Intensities built from these operators come out in mu^2 units.
    """

    plus: Operator
    minus: Operator
    chi_over_mu: float
    include_sp: bool = True
    include_qd: bool = True


def build_polarization(
    ops: SystemOperators, coupling: CouplingConstants, include_sp: bool = True, include_qd: bool = True
) -> PolarizationOps:
    """
    Assemble P+ and P- = (P+)^dag

    Args:
        ops: System operators
        coupling: Coupling constants (for chi/mu)
        include_sp: Keep the SP dipole term
        include_qd: Keep the QD dipole term

    Returns:
        PolarizationOps
    """
    plus = 0.0 * ops.a
    if include_sp:
        plus = plus + coupling.chi_over_mu * ops.a
    if include_qd:
        plus = plus + ops.sigma
    return PolarizationOps(
        plus=plus,
        minus=plus.dag,
        chi_over_mu=coupling.chi_over_mu,
        include_sp=include_sp,
        include_qd=include_qd,
    )


def polarization_for(p: SystemParams, ops: SystemOperators) -> PolarizationOps:
    """Polarization of the emitters that are actually driven in p"""
    return build_polarization(ops, p.coupling, include_sp=p.drive.drive_sp, include_qd=p.drive.drive_qd)
