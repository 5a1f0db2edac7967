import numpy as np
import pytest

from plasmon_qed.errors import DimensionError, ParameterError
from plasmon_qed.quantum.space import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    basis_state,
    build_system_operators,
    expectation,
    validate_density_matrix,
)
from tests.conftest import random_density_matrix


def test_space_dimensions():
    space = HilbertSpace(3)
    assert space.fock_dim == 4
    assert space.dim == 8
    assert space.index(2, excited=True) == 5
    with pytest.raises(DimensionError):
        space.index(4, excited=False)


@pytest.mark.parametrize("n_max", [0, -1, 2.5, True])
def test_invalid_cutoff(n_max):
    with pytest.raises(ParameterError):
        HilbertSpace(n_max)


def test_sp_lowering_matrix_elements():
    space = HilbertSpace(4)
    ops = build_system_operators(space)
    for n in range(1, space.n_max + 1):
        for excited in (False, True):
            row, col = space.index(n - 1, excited), space.index(n, excited)
            assert ops.a.matrix[row, col] == pytest.approx(np.sqrt(n), abs=0)
    assert np.count_nonzero(ops.a.matrix) == 2 * space.n_max


def test_exciton_lowering_is_nilpotent():
    ops = build_system_operators(HilbertSpace(3))
    assert not np.any((ops.sigma @ ops.sigma).matrix)
    assert ops.sigma.matrix[0, 1] == 1.0


def test_truncated_commutator():
    space = HilbertSpace(5)
    ops = build_system_operators(space)
    commutator = ops.a.commutator(ops.a_dag).matrix
    top = space.index(space.n_max, False)
    np.testing.assert_allclose(commutator[:top, :top], np.eye(top), atol=1e-14)
    assert commutator[top, top] == pytest.approx(-space.n_max)
    assert commutator[top + 1, top + 1] == pytest.approx(-space.n_max)


def test_number_operators_are_hermitian():
    ops = build_system_operators(HilbertSpace(3))
    assert ops.n_sp.is_hermitian()
    assert ops.n_x.is_hermitian()
    assert not ops.a.is_hermitian()
    np.testing.assert_array_equal(ops.a_dag.matrix, ops.a.matrix.conj().T)


def test_operator_algebra_and_immutability():
    space = HilbertSpace(2)
    ops = build_system_operators(space)
    combined = 2.0 * ops.a + ops.sigma - ops.a
    np.testing.assert_allclose(combined.matrix, ops.a.matrix + ops.sigma.matrix)
    np.testing.assert_array_equal((-ops.a).matrix, -ops.a.matrix)
    with pytest.raises(ValueError):
        ops.a.matrix[0, 0] = 1.0


def test_mismatched_spaces():
    small = build_system_operators(HilbertSpace(1))
    large = build_system_operators(HilbertSpace(2))
    with pytest.raises(DimensionError):
        small.a @ large.a
    with pytest.raises(DimensionError):
        Operator(HilbertSpace(1), np.eye(6))
    rho = DensityMatrix.from_state_vector(HilbertSpace(1), basis_state(HilbertSpace(1), 0))
    with pytest.raises(DimensionError):
        expectation(rho, large.n_x)


def test_expectations_on_basis_states():
    space = HilbertSpace(2)
    ops = build_system_operators(space)
    ground = DensityMatrix.from_state_vector(space, basis_state(space, 0, excited=False))
    excited = DensityMatrix.from_state_vector(space, basis_state(space, 0, excited=True))
    assert expectation(ground, ops.n_x) == 0
    assert expectation(excited, ops.n_x) == pytest.approx(1.0)

    superposition = DensityMatrix.from_state_vector(space, basis_state(space, 0) + basis_state(space, 0, excited=True))
    assert expectation(superposition, ops.sigma) == pytest.approx(0.5, abs=1e-15)


def test_expectation_of_fock_state():
    space = HilbertSpace(4)
    ops = build_system_operators(space)
    rho = DensityMatrix.from_state_vector(space, basis_state(space, 3))
    assert expectation(rho, ops.n_sp).real == pytest.approx(3.0)


def test_valid_mixed_state_diagnostics():
    space = HilbertSpace(2)
    weights = np.array([0.5, 0.2, 0.1, 0.1, 0.05, 0.05])
    diagnostics = validate_density_matrix(DensityMatrix(space, np.diag(weights)))
    assert diagnostics.valid
    assert diagnostics.hermiticity_defect < 1e-14
    assert diagnostics.trace_defect < 1e-14


def test_half_trace_is_flagged():
    diagnostics = validate_density_matrix(0.5 * np.eye(2) / 2.0)
    assert not diagnostics.unit_trace
    assert diagnostics.hermitian and diagnostics.positive
    assert not diagnostics.valid
    assert "trace" in diagnostics.describe()


def test_pure_state_is_positive(rng):
    space = HilbertSpace(3)
    psi = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    diagnostics = validate_density_matrix(DensityMatrix.from_state_vector(space, psi))
    assert diagnostics.valid
    assert abs(diagnostics.min_eigenvalue) < 1e-12


def test_non_hermitian_and_negative_states_are_flagged(rng):
    rho = random_density_matrix(rng, 4)
    skewed = rho.copy()
    skewed[0, 1] += 1e-6
    assert not validate_density_matrix(skewed).hermitian
    assert not validate_density_matrix(np.diag([1.5, -0.5])).positive


def test_zero_state_vector():
    with pytest.raises(ParameterError):
        DensityMatrix.from_state_vector(HilbertSpace(1), np.zeros(4))
