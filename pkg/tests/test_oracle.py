import math
import numpy as np
import pytest
from treemg import oracle, problems
from treemg.cycle import CycleKind
from treemg.exceptions import CapacityError, ContractError, SingularDiagonalError
from treemg.omega import OmegaKind, OmegaPolicy
from .libtest import poisson, with_dims


def test_interior_numbering():
    assert oracle.interior_count(3, 1) == 8
    indices = oracle.interior_indices(2, 2)
    assert len(indices) == 64
    assert indices[:2] == [(1, 1), (2, 1)]
    assert indices[-1] == (8, 8)


def test_dense_assemble_1d():
    matrix = oracle.dense_assemble(1, 1)
    assert np.allclose(matrix, [[6.0, -3.0], [-3.0, 6.0]])


def test_dense_assemble_cap():
    with pytest.raises(CapacityError) as e_info:
        oracle.dense_assemble(2, 4, cap=1000)
    assert str(e_info.value) == "level 4 in 2 dimensions has 6400 unknowns, cap is 1000"
    with pytest.raises(ContractError):
        oracle.dense_assemble(2, 0)


def test_direct_solve():
    rng = np.random.default_rng(11)
    matrix = rng.uniform(-1, 1, (6, 6)) + 1j * rng.uniform(-1, 1, (6, 6)) + 4 * np.eye(6)
    rhs = rng.uniform(-1, 1, 6)
    solution = oracle.direct_solve(matrix, rhs)
    assert np.allclose(solution.x, np.linalg.solve(matrix, rhs))
    assert solution.residual < 1e-12


def test_direct_solve_singular():
    with pytest.raises(SingularDiagonalError) as e_info:
        oracle.direct_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))
    assert str(e_info.value) == "matrix is singular in column 1"
    with pytest.raises(ContractError):
        oracle.direct_solve(np.eye(2), np.ones(3))


def test_discrete_solution_approximates_poisson():
    level = 3
    matrix = oracle.dense_assemble(1, level)
    load = oracle.dense_load(1, level, problems.chi_sin)
    solution = oracle.direct_solve(matrix, load)
    x = np.array([i for (i,) in oracle.interior_indices(1, level)]) * 3.0**-level
    assert np.max(np.abs(solution.x - np.sin(math.pi * x))) < 5e-3


@with_dims(1, 2)
def test_galerkin_property(p):
    fine = oracle.dense_assemble(p, 2, 0.3, 25.0)
    coarse = oracle.dense_assemble(p, 1, 0.3, 25.0)
    assert oracle.galerkin_deviation(fine, coarse, oracle.prolongation_matrix(p, 2)) < 1e-10


def test_galerkin_violated_by_varying_shift():
    def phi(cell):
        return 500.0 if cell.centre[0] < 0.45 else 0.0

    fine = oracle.dense_assemble(1, 2, 0.0, phi)
    coarse = oracle.dense_assemble(1, 1, 0.0, phi)
    assert oracle.galerkin_deviation(fine, coarse, oracle.prolongation_matrix(1, 2)) > 1e-6


@with_dims(1, 2)
def test_injection_inverts_prolongation(p):
    product = oracle.injection_matrix(p, 2) @ oracle.prolongation_matrix(p, 2)
    assert np.allclose(product, np.eye(oracle.interior_count(p, 1)))


def test_coupled_assembly_without_coupling():
    matrix = oracle.dense_assemble_coupled(1, 1, 0.0, [0.0, 9.0], np.zeros((2, 2)))
    assert np.allclose(matrix[0::2, 0::2], oracle.dense_assemble(1, 1))
    assert np.allclose(matrix[1::2, 1::2], oracle.dense_assemble(1, 1, 0.0, 9.0))
    assert np.allclose(matrix[0::2, 1::2], 0.0)


def test_hierarchy_invalid_levels():
    with pytest.raises(ContractError) as e_info:
        oracle.DenseHierarchy(1, 2, 3)
    assert str(e_info.value) == "need 1 <= min_level <= level, got min_level=3, level=2"


def test_jacobi_policy_is_plain_jacobi():
    hierarchy = oracle.DenseHierarchy(1, 2, chi=problems.chi_sin)
    u0 = np.linspace(0.1, 0.8, 8)
    u = oracle.reference_cycles(CycleKind.BU_FAS, hierarchy, OmegaPolicy(OmegaKind.JACOBI), 3, u0)
    expected = u0.astype(complex)
    operator = hierarchy.operators[2]
    for _ in range(3):
        expected = expected + 0.8 * (hierarchy.load - operator @ expected) / np.diagonal(operator)
    assert np.allclose(u[2], expected)


@with_dims(1, 2)
def test_pipelined_cycles_lag_one_cycle(p):
    hierarchy = oracle.DenseHierarchy.from_problem(poisson(p, 0.2, 12.0), 2)
    u0 = np.random.default_rng(2).uniform(-1, 1, oracle.interior_count(p, 2))
    policy = OmegaPolicy(OmegaKind.TRANSITION)
    bottom_up = oracle.reference_cycles(CycleKind.BU_FAS, hierarchy, policy, 3, u0)
    top_down = oracle.reference_cycles(CycleKind.TD_ADD, hierarchy, policy, 4, u0)
    assert np.allclose(top_down[2], bottom_up[2], atol=1e-12)
    bpx = policy._replace(bpx=True)
    bottom_up = oracle.reference_cycles(CycleKind.BU_FAS, hierarchy, bpx, 3, u0)
    top_down = oracle.reference_cycles(CycleKind.TD_BPX, hierarchy, bpx, 4, u0)
    assert np.allclose(top_down[2], bottom_up[2], atol=1e-12)


def test_textbook_equals_exponential_damping():
    hierarchy = oracle.DenseHierarchy.from_problem(poisson(2, 0.4, 7.0), 2)
    u0 = np.random.default_rng(4).uniform(-1, 1, 64)
    policy = OmegaPolicy(OmegaKind.EXPONENTIAL, omega_s=0.7)
    textbook = oracle.reference_cycles(CycleKind.TEXTBOOK_ADD, hierarchy, policy, 2, u0, omega_cg=0.7)
    bottom_up = oracle.reference_cycles(CycleKind.BU_FAS, hierarchy, policy, 2, u0)
    assert np.allclose(textbook[2], bottom_up[2], atol=1e-12)


def test_cycles_converge_to_direct_solution():
    hierarchy = oracle.DenseHierarchy(2, 2, chi=problems.chi_sin)
    exact = oracle.direct_solve(hierarchy.operators[2], hierarchy.load).x
    u = oracle.reference_cycles(CycleKind.BU_FAS, hierarchy, OmegaPolicy(), 40)
    assert np.max(np.abs(u[2] - exact)) < 1e-2 * np.max(np.abs(exact))
