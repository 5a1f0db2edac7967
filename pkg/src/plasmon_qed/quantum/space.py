"""
Truncated Hilbert space of the hybrid molecule and its operator algebra

Tensor order is fixed everywhere: SP Fock factor first, exciton second. The basis
index of |n, m> (n photons, m = 0 ground / 1 excited) is 2*n + m.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..errors import DimensionError, ParameterError

logger = logging.getLogger(__name__)

HERMITICITY_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-10
POSITIVITY_TOLERANCE = 1e-9

Scalar = Union[int, float, complex]


@dataclass(frozen=True)
class HilbertSpace:
    """SP Fock states 0..n_max tensored with a two-level exciton"""

    n_max: int

    def __post_init__(self):
        if isinstance(self.n_max, bool) or not isinstance(self.n_max, (int, np.integer)):
            raise ParameterError(f"Fock cutoff must be an integer, got {self.n_max!r}")
        if self.n_max < 1:
            raise ParameterError(f"Fock cutoff must be >= 1, got {self.n_max}")

    @property
    def fock_dim(self) -> int:
        return int(self.n_max) + 1

    @property
    def dim(self) -> int:
        return 2 * self.fock_dim

    def index(self, n: int, excited: bool) -> int:
        """Basis index of |n, g> or |n, e>"""
        if not 0 <= n <= self.n_max:
            raise DimensionError(f"photon number {n} outside 0..{self.n_max}")
        return 2 * n + int(bool(excited))


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex operator on a HilbertSpace"""

    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (self.space.dim, self.space.dim):
            raise DimensionError(f"operator shape {matrix.shape} does not match space dim {self.space.dim}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def _check(self, other: "Operator") -> None:
        if other.space != self.space:
            raise DimensionError(f"operators on n_max={self.space.n_max} and n_max={other.space.n_max}")

    @property
    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix @ other.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.space, self.matrix - other.matrix)

    def __mul__(self, scalar: Scalar) -> "Operator":
        return Operator(self.space, scalar * self.matrix)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.space, -self.matrix)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def is_hermitian(self, atol: float = 1e-14) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= atol)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """
    System state on a HilbertSpace

    Construction only checks the shape; physical validity is reported by
    validate_density_matrix.
    """

    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (self.space.dim, self.space.dim):
            raise DimensionError(f"density matrix shape {matrix.shape} does not match space dim {self.space.dim}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_state_vector(cls, space: HilbertSpace, psi: np.ndarray) -> "DensityMatrix":
        """Pure state |psi><psi| (psi is normalised here)"""
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        if psi.shape != (space.dim,):
            raise DimensionError(f"state vector length {psi.size} does not match space dim {space.dim}")
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ParameterError("zero state vector")
        psi = psi / norm
        return cls(space, np.outer(psi, psi.conj()))

    def hermitized(self) -> "DensityMatrix":
        return DensityMatrix(self.space, 0.5 * (self.matrix + self.matrix.conj().T))


def basis_state(space: HilbertSpace, n: int, excited: bool = False) -> np.ndarray:
    """Basis ket |n> (x) |e or g> as a state vector"""
    psi = np.zeros(space.dim, dtype=complex)
    psi[space.index(n, excited)] = 1.0
    return psi


@dataclass(frozen=True)
class SystemOperators:
    """Full-space ladder operators of the SP mode and the exciton"""

    space: HilbertSpace
    a: Operator
    a_dag: Operator
    sigma: Operator
    sigma_dag: Operator
    n_sp: Operator
    n_x: Operator
    identity: Operator


def build_system_operators(space: HilbertSpace) -> SystemOperators:
    """
    Build a, a^dag, sigma, sigma^dag, a^dag a and sigma^dag sigma on the full space

    Args:
        space: Truncated Hilbert space

    Returns:
        SystemOperators
    """
    fock_lowering = np.diag(np.sqrt(np.arange(1, space.fock_dim, dtype=float)), k=1)
    qubit_lowering = np.array([[0.0, 1.0], [0.0, 0.0]])

    a = Operator(space, np.kron(fock_lowering, np.eye(2)))
    sigma = Operator(space, np.kron(np.eye(space.fock_dim), qubit_lowering))

    logger.debug(f"Built system operators on n_max = {space.n_max} (dim {space.dim})")
    return SystemOperators(
        space=space,
        a=a,
        a_dag=a.dag,
        sigma=sigma,
        sigma_dag=sigma.dag,
        n_sp=a.dag @ a,
        n_x=sigma.dag @ sigma,
        identity=Operator(space, np.eye(space.dim)),
    )


def expectation(rho: DensityMatrix, op: Operator) -> complex:
    """
    Tr[A rho]

    Raises:
        DimensionError: rho and A live on different spaces
    """
    if rho.space != op.space:
        raise DimensionError(f"state on n_max={rho.space.n_max}, operator on n_max={op.space.n_max}")
    return complex(np.sum(op.matrix * rho.matrix.T))


@dataclass(frozen=True)
class DensityDiagnostics:
    """Invariant defects of a density matrix"""

    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float

    @property
    def hermitian(self) -> bool:
        return self.hermiticity_defect < HERMITICITY_TOLERANCE

    @property
    def unit_trace(self) -> bool:
        return self.trace_defect < TRACE_TOLERANCE

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue > -POSITIVITY_TOLERANCE

    @property
    def valid(self) -> bool:
        return self.hermitian and self.unit_trace and self.positive

    def describe(self) -> str:
        return (
            f"hermiticity {self.hermiticity_defect:.2e}, trace {self.trace_defect:.2e}, "
            f"min eigenvalue {self.min_eigenvalue:.2e}"
        )


def validate_density_matrix(rho: Union[DensityMatrix, np.ndarray]) -> DensityDiagnostics:
    """
    Report Hermiticity defect, trace defect and minimum eigenvalue

    Never raises on an unphysical state; callers decide what to do with the flags.
    """
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    hermiticity = float(np.max(np.abs(matrix - matrix.conj().T)))
    trace = float(abs(np.trace(matrix) - 1.0))
    min_eigenvalue = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))[0])

    diagnostics = DensityDiagnostics(hermiticity, trace, min_eigenvalue)
    if not diagnostics.valid:
        logger.debug(f"Density matrix invariant violated: {diagnostics.describe()}")
    return diagnostics
