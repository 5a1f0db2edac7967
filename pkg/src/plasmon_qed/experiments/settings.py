"""
Turn an ExperimentConfig into physical parameter records
"""

import logging
from dataclasses import replace
from typing import Optional

from ..optics.coupling import coupling_constants
from ..optics.permittivity import load_permittivity_table
from ..optics.quasi_mode import QuasiModeParams, quasi_mode_params
from ..quantum.liouvillian import DriveParams, SystemParams
from .config import ExperimentConfig

logger = logging.getLogger(__name__)


def resolve_quasi_mode(cfg: ExperimentConfig) -> QuasiModeParams:
    """Load the configured permittivity table and reduce it to the SP quasi-mode"""
    table = load_permittivity_table(cfg.table_path)
    return quasi_mode_params(table, cfg.eps_b)


def build_system_params(
    cfg: ExperimentConfig,
    q: QuasiModeParams,
    R_nm: Optional[float] = None,
    detuning: Optional[float] = None,
    rabi: Optional[float] = None,
    offset: Optional[float] = None,
) -> SystemParams:
    """
    SystemParams for the configured molecule, optionally overriding one sweep variable

    Args:
        cfg: Experiment config
        q: SP quasi-mode
        R_nm: QD-MNP distance [nm]
        detuning: omega_x - omega_sp [meV]
        rabi: Rabi energy [meV]
        offset: omega_i - omega_x [meV]

    Returns:
        SystemParams
    """
    geometry = cfg.geometry if R_nm is None else replace(cfg.geometry, R_nm=float(R_nm))
    omega_x = q.omega_sp + (cfg.detuning if detuning is None else float(detuning))
    drive = DriveParams(
        omega_i=omega_x + (cfg.offset if offset is None else float(offset)),
        rabi=cfg.rabi if rabi is None else float(rabi),
    )
    return SystemParams(
        omega_x=omega_x,
        gamma_x=cfg.gamma_x,
        quasi_mode=q,
        coupling=coupling_constants(geometry, q),
        geometry=geometry,
        drive=drive,
    )
