"""
Rotating-frame Hamiltonian and Lindblad generator of the driven QD-SP molecule

Density matrices are vectorised column-first (Fortran order), so that
vec(A rho B) = kron(B^T, A) vec(rho).
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
from scipy.linalg import eigvals

from ..config import Config
from ..errors import DimensionError, ParameterError
from ..optics.coupling import CouplingConstants, GeometryParams
from ..optics.quasi_mode import QuasiModeParams
from .space import DensityMatrix, HilbertSpace, Operator, SystemOperators, build_system_operators

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DriveParams:
    """
    Monochromatic drive at omega_i [meV] with Rabi energy Omega = 2 mu E0 [meV]

    drive_qd and drive_sp switch the two excitation paths independently; turning one
    off gives the MNP-only and bare-QD reference systems.
    """

    omega_i: float
    rabi: float
    drive_qd: bool = True
    drive_sp: bool = True

    def __post_init__(self):
        if not self.rabi >= 0:
            raise ParameterError(f"Rabi energy must be >= 0, got {self.rabi}")


@dataclass(frozen=True)
class SystemParams:
    """Complete physical description of the driven hybrid molecule (energies in meV)"""

    omega_x: float
    gamma_x: float
    quasi_mode: QuasiModeParams
    coupling: CouplingConstants
    geometry: GeometryParams
    drive: DriveParams

    def __post_init__(self):
        if not self.gamma_x > 0:
            raise ParameterError(f"gamma_x must be positive, got {self.gamma_x}")
        if not self.quasi_mode.gamma_sp > 0:
            raise ParameterError(f"gamma_sp must be positive, got {self.quasi_mode.gamma_sp}")

    @property
    def omega_sp(self) -> float:
        return self.quasi_mode.omega_sp

    @property
    def gamma_sp(self) -> float:
        return self.quasi_mode.gamma_sp

    @property
    def g(self) -> float:
        return self.coupling.g

    @property
    def detuning(self) -> float:
        """omega_x - omega_sp"""
        return self.omega_x - self.quasi_mode.omega_sp

    @property
    def qd_drive(self) -> float:
        """Exciton drive amplitude Omega/2 [meV]"""
        return 0.5 * self.drive.rabi if self.drive.drive_qd else 0.0

    @property
    def sp_drive(self) -> float:
        """SP drive amplitude chi E0 = (chi/mu) Omega/2 [meV]"""
        return self.coupling.chi_over_mu * 0.5 * self.drive.rabi if self.drive.drive_sp else 0.0

    def with_drive(self, omega_i: Optional[float] = None, rabi: Optional[float] = None) -> "SystemParams":
        """Same system under a different drive frequency and/or strength"""
        drive = replace(
            self.drive,
            omega_i=self.drive.omega_i if omega_i is None else omega_i,
            rabi=self.drive.rabi if rabi is None else rabi,
        )
        return replace(self, drive=drive)

    def decoupled(self) -> "SystemParams":
        """Both emitters driven, QD-SP coupling switched off"""
        return replace(self, coupling=replace(self.coupling, g=0.0))

    def without_mnp(self) -> "SystemParams":
        """Bare QD: no coupling and no SP drive"""
        return replace(self.decoupled(), drive=replace(self.drive, drive_sp=False))

    def mnp_only(self) -> "SystemParams":
        """Bare MNP: no coupling and no exciton drive"""
        return replace(self.decoupled(), drive=replace(self.drive, drive_qd=False))


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """
    Lindblad generator acting on column-vectorised density matrices [1/ps]

    frame_frequency is the drive frequency of the rotating frame; energy_scale bounds
    the fastest rate in the generator [meV] and sets integration step sizes.
    """

    space: HilbertSpace
    generator: np.ndarray
    frame_frequency: float = 0.0
    energy_scale: float = 1.0

    def __post_init__(self):
        size = self.space.dim**2
        if self.generator.shape != (size, size):
            raise DimensionError(f"generator shape {self.generator.shape} does not match dim^2 = {size}")


def vectorize(matrix: np.ndarray) -> np.ndarray:
    return np.asarray(matrix).reshape(-1, order="F")


def unvectorize(vector: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(vector).reshape(dim, dim, order="F")


def trace_functional(space: HilbertSpace) -> np.ndarray:
    """Row vector t with t . vec(rho) = Tr rho"""
    return vectorize(np.eye(space.dim, dtype=complex))


def build_hamiltonian(p: SystemParams, space: HilbertSpace, ops: Optional[SystemOperators] = None) -> Operator:
    """
    System Hamiltonian in the frame rotating at the drive frequency

    H = (w_sp - w_i) a^dag a + (w_x - w_i) s^dag s + i g (a^dag s - a s^dag)
        - chi E0 (a^dag + a) - (Omega/2)(s^dag + s)

    Args:
        p: System parameters
        space: Truncated Hilbert space
        ops: Prebuilt operators on the same space

    Returns:
        Hermitian Operator [meV]
    """
    ops = ops or build_system_operators(space)
    omega_i = p.drive.omega_i

    H = (p.omega_sp - omega_i) * ops.n_sp + (p.omega_x - omega_i) * ops.n_x
    H = H + (1j * p.g) * (ops.a_dag @ ops.sigma - ops.a @ ops.sigma_dag)
    H = H - p.sp_drive * (ops.a_dag + ops.a)
    H = H - p.qd_drive * (ops.sigma_dag + ops.sigma)
    return H


def _dissipator(jump: np.ndarray) -> np.ndarray:
    identity = np.eye(jump.shape[0])
    number = jump.conj().T @ jump
    return np.kron(jump.conj(), jump) - 0.5 * np.kron(identity, number) - 0.5 * np.kron(number.T, identity)


def build_liouvillian(
    H: Operator,
    gamma_sp: float,
    gamma_x: float,
    space: HilbertSpace,
    ops: Optional[SystemOperators] = None,
    frame_frequency: float = 0.0,
) -> Liouvillian:
    """
    Materialise the Lindblad generator as a dim^2 x dim^2 matrix

    L rho = -(i/hbar)[H, rho] + (gamma_sp/hbar) D[a] rho + (gamma_x/hbar) D[sigma] rho

    Args:
        H: System Hamiltonian [meV]
        gamma_sp: SP decay rate [meV]
        gamma_x: Exciton decay rate [meV]
        space: Hilbert space of H
        ops: Prebuilt operators on the same space
        frame_frequency: Rotating-frame frequency recorded on the generator [meV]

    Returns:
        Liouvillian in 1/ps
    """
    if H.space != space:
        raise DimensionError(f"Hamiltonian on n_max={H.space.n_max}, requested n_max={space.n_max}")
    ops = ops or build_system_operators(space)
    hbar = Config.HBAR_MEV_PS
    identity = np.eye(space.dim)

    generator = -1j / hbar * (np.kron(identity, H.matrix) - np.kron(H.matrix.T, identity))
    generator = generator + gamma_sp / hbar * _dissipator(ops.a.matrix)
    generator = generator + gamma_x / hbar * _dissipator(ops.sigma.matrix)

    energy_scale = max(float(np.linalg.norm(H.matrix, 2)), gamma_sp * space.n_max, gamma_x)
    logger.debug(f"Liouvillian assembled: size {generator.shape[0]}, energy scale {energy_scale:.3f} meV")
    return Liouvillian(space=space, generator=generator, frame_frequency=frame_frequency, energy_scale=energy_scale)


def build_system_liouvillian(p: SystemParams, space: HilbertSpace, ops: Optional[SystemOperators] = None) -> Liouvillian:
    """Hamiltonian and generator for a parameter set in one call"""
    ops = ops or build_system_operators(space)
    H = build_hamiltonian(p, space, ops)
    return build_liouvillian(H, p.gamma_sp, p.gamma_x, space, ops, frame_frequency=p.drive.omega_i)


def apply_liouvillian(L: Liouvillian, rho: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    """
    d rho / dt = L(rho) as a dim x dim matrix

    Raises:
        DimensionError: rho does not live on L's space
    """
    if isinstance(rho, DensityMatrix):
        if rho.space != L.space:
            raise DimensionError(f"state on n_max={rho.space.n_max}, generator on n_max={L.space.n_max}")
        matrix = rho.matrix
    else:
        matrix = np.asarray(rho, dtype=complex)
        if matrix.shape != (L.space.dim, L.space.dim):
            raise DimensionError(f"matrix shape {matrix.shape} does not match space dim {L.space.dim}")
    return unvectorize(L.generator @ vectorize(matrix), L.space.dim)


def lindblad_rhs(H: Operator, gamma_sp: float, gamma_x: float, ops: SystemOperators, rho: np.ndarray) -> np.ndarray:
    """Direct evaluation of the master equation without vectorisation"""
    hbar = Config.HBAR_MEV_PS
    rho = np.asarray(rho, dtype=complex)
    drho = -1j / hbar * (H.matrix @ rho - rho @ H.matrix)

    for gamma, jump in ((gamma_sp, ops.a.matrix), (gamma_x, ops.sigma.matrix)):
        jump_dag = jump.conj().T
        number = jump_dag @ jump
        drho += gamma / hbar * (jump @ rho @ jump_dag - 0.5 * (number @ rho + rho @ number))

    return drho


@dataclass(frozen=True)
class SpectralGap:
    smallest: float
    second: float
    radius: float

    @property
    def unique_steady_state(self) -> bool:
        return self.second > 1e-8 * self.radius


def liouvillian_spectrum_gap(L: Liouvillian) -> SpectralGap:
    """Smallest and second-smallest |eigenvalue| and the spectral radius of the generator [1/ps]"""
    magnitudes = np.sort(np.abs(eigvals(L.generator)))
    gap = SpectralGap(smallest=float(magnitudes[0]), second=float(magnitudes[1]), radius=float(magnitudes[-1]))
    logger.debug(
        f"Liouvillian spectrum: |lambda_0| = {gap.smallest:.2e}, |lambda_1| = {gap.second:.3e}, "
        f"radius = {gap.radius:.3e} /ps"
    )
    return gap
