"""
Shared fixtures: bundled silver table, reference molecule parameters and small synthetic systems
"""

from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from plasmon_qed.config import Config
from plasmon_qed.optics.coupling import CouplingConstants, GeometryParams, coupling_constants, dipole_to_si
from plasmon_qed.optics.permittivity import PermittivityTable, load_permittivity_table
from plasmon_qed.optics.quasi_mode import QuasiModeParams, quasi_mode_params
from plasmon_qed.quantum.liouvillian import DriveParams, SystemParams

REFERENCE_EPS_B = 3.0
REFERENCE_GEOMETRY = GeometryParams(R_nm=14.0, r_m_nm=7.0, s_alpha=2, mu_enm=0.7)
REFERENCE_GAMMA_X = 0.001


def write_table(path: Path, energies, eps_re, eps_im, header: str = "energy_ev,eps_re,eps_im") -> Path:
    """Write a permittivity CSV for parser tests"""
    lines = [header] + [f"{e},{re},{im}" for e, re, im in zip(energies, eps_re, eps_im)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def silver_table() -> PermittivityTable:
    return load_permittivity_table(Config.get_silver_table_path())


@pytest.fixture(scope="session")
def silver_mode(silver_table) -> QuasiModeParams:
    return quasi_mode_params(silver_table, REFERENCE_EPS_B)


@pytest.fixture(scope="session")
def silver_molecule(silver_mode) -> Callable[..., SystemParams]:
    """Factory for the reference molecule: silver sphere, R = 14 nm, mu = 0.7 e*nm"""

    def make(detuning: float = -60.0, rabi: float = 0.02, offset: float = 0.0, R_nm: float = 14.0) -> SystemParams:
        geometry = GeometryParams(R_nm=R_nm, r_m_nm=REFERENCE_GEOMETRY.r_m_nm, s_alpha=2, mu_enm=REFERENCE_GEOMETRY.mu_enm)
        omega_x = silver_mode.omega_sp + detuning
        return SystemParams(
            omega_x=omega_x,
            gamma_x=REFERENCE_GAMMA_X,
            quasi_mode=silver_mode,
            coupling=coupling_constants(geometry, silver_mode),
            geometry=geometry,
            drive=DriveParams(omega_i=omega_x + offset, rabi=rabi),
        )

    return make


def synthetic_params(
    g: float = 2.0,
    chi_over_mu: float = 3.0,
    gamma_sp: float = 10.0,
    gamma_x: float = 1.0,
    omega_sp: float = 1000.0,
    omega_x: float = 1000.0,
    omega_i: float = 1000.0,
    rabi: float = 1.0,
    drive_qd: bool = True,
    drive_sp: bool = True,
) -> SystemParams:
    """Small, well-conditioned molecule with round-number rates (meV)"""
    mu = dipole_to_si(0.7)
    return SystemParams(
        omega_x=omega_x,
        gamma_x=gamma_x,
        quasi_mode=QuasiModeParams(omega_sp=omega_sp, gamma_sp=gamma_sp, eta=50.0, eps_b=REFERENCE_EPS_B),
        coupling=CouplingConstants(g=g, chi=chi_over_mu * mu, field=1.0, mu=mu),
        geometry=REFERENCE_GEOMETRY,
        drive=DriveParams(omega_i=omega_i, rabi=rabi, drive_qd=drive_qd, drive_sp=drive_sp),
    )


@pytest.fixture
def synthetic() -> Callable[..., SystemParams]:
    return synthetic_params


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Full-rank Hermitian, positive, trace-one matrix"""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = z @ z.conj().T
    return rho / np.trace(rho)
