import numpy as np
import pytest
from treemg import kernels, oracle, problems
from treemg.discretisation import Discretisation
from treemg.elemops import cell_operator
from treemg.exceptions import ConfigurationError, SingularDiagonalError
from treemg.spacetree import Spacetree
from .libtest import level_values, poisson, with_dims


def _randomised_tree(problem, level, seed=5):
    tree = Spacetree.build_regular(problem.p, level, problem)
    rng = np.random.default_rng(seed)
    for key in sorted(tree.vertices):
        vertex = tree.vertices[key]
        if not vertex.boundary:
            vertex.payload.u[:] = rng.uniform(-1, 1, tree.channels) + 1j * rng.uniform(-1, 1, tree.channels)
    return tree


def _fine_residual(tree, channel=0):
    level = tree.max_level
    return np.array([tree.vertices[(level, i)].payload.r[channel] for i in oracle.interior_indices(tree.p, level)])


@with_dims(1, 2, 3)
def test_residual_matches_dense(p):
    problem = poisson(p, theta=0.3, phi=30.0)
    level = 2 if p < 3 else 1
    tree = _randomised_tree(problem, level)
    kernels.evaluate_residual(Discretisation(tree, problem))
    hierarchy = oracle.DenseHierarchy.from_problem(problem, level, level)
    expected = hierarchy.load - hierarchy.operators[level] @ level_values(tree, level)
    assert np.allclose(_fine_residual(tree), expected, atol=1e-12)


def test_residual_absorbing_layer():
    problem = problems.gaussian(0.2)
    tree = _randomised_tree(problem, 2)
    kernels.evaluate_residual(Discretisation(tree, problem))
    hierarchy = oracle.DenseHierarchy.from_problem(problem, 2, 2)
    expected = hierarchy.load - hierarchy.operators[2] @ level_values(tree, 2)
    assert np.allclose(_fine_residual(tree), expected, rtol=1e-12, atol=1e-9)


def test_coupled_residual_and_block():
    problem = problems.constant_shift(
        "coupled",
        2,
        [problems.ChiKind.SIN],
        [10.0, 20.0],
        channels=2,
        coupling=problems.Coupling.COUPLED_BLOCK,
        coupling_strength=5.0,
    )
    tree = _randomised_tree(problem, 2)
    kernels.evaluate_residual(Discretisation(tree, problem))
    matrix = oracle.dense_assemble_coupled(2, 2, 0.0, [10.0, 20.0], problem.couplings)
    load = oracle.dense_load(2, 2, lambda x: problems.chi_sin(x))
    indices = oracle.interior_indices(2, 2)
    u = np.array([tree.vertices[(2, i)].payload.u for i in indices]).reshape(-1)
    residual = np.array([tree.vertices[(2, i)].payload.r for i in indices]).reshape(-1)
    assert np.allclose(residual, np.repeat(load, 2) - matrix @ u, atol=1e-12)
    block = tree.vertices[(2, indices[0])].payload.block
    assert np.allclose(block, matrix[:2, :2])


def test_accumulate_cell_channels():
    ops = np.array([cell_operator(1, 1.0, 0.0, phi).matrix for phi in (0.0, 6.0)])
    u = np.array([[1.0, 1.0], [1.0, 1.0]])
    d_r, d_r_hat, d_diag = kernels.accumulate_cell(ops, u, np.zeros((2, 2)))
    assert np.allclose(d_r[:, 0], 0.0)
    assert np.allclose(d_r[:, 1], 6.0 * 0.5)
    assert np.allclose(d_r_hat, 0.0)
    assert np.allclose(d_diag[:, 0], 1.0)
    assert np.allclose(d_diag[:, 1], 1.0 - 6.0 * 2 / 6)


def test_finish_vertex_pins_boundary():
    tree = Spacetree.build_regular(1, 1)
    vertex = tree.vertices[(1, (0,))]
    vertex.payload.u[:] = 4.0
    vertex.payload.r[:] = 1.0
    kernels.finish_vertex(vertex)
    assert vertex.payload.u[0] == 0.0
    assert vertex.payload.r[0] == 0.0


def test_finish_vertex_singular():
    tree = Spacetree.build_regular(1, 1)
    vertex = tree.vertices[(1, (1,))]
    with pytest.raises(SingularDiagonalError) as e_info:
        kernels.finish_vertex(vertex)
    assert str(e_info.value) == "zero diagonal at vertex (1, (1,))"


def test_jacobi():
    assert kernels.jacobi(2.0, 4.0, 0.5) == pytest.approx(0.25)
    assert kernels.jacobi(1j, 2.0, 1j) == pytest.approx(-0.5)
    with pytest.raises(SingularDiagonalError) as e_info:
        kernels.jacobi(1.0, 0.0, 0.8)
    assert str(e_info.value) == "diagonal 0.0 is singular"


def test_block_jacobi():
    block = np.array([[2.0, 1.0], [1.0, 2.0]])
    update = kernels.block_jacobi(np.array([3.0, 3.0]), block, 0.5)
    assert np.allclose(update, [0.5, 0.5])
    with pytest.raises(SingularDiagonalError) as e_info:
        kernels.block_jacobi(np.ones(2), np.ones((2, 2)), 0.8)
    assert str(e_info.value) == "diagonal block [[1.0, 1.0], [1.0, 1.0]] is singular"


def test_discretisation_checks():
    tree = Spacetree.build_regular(2, 1)
    with pytest.raises(ConfigurationError) as e_info:
        Discretisation(tree, poisson(2), 0)
    assert str(e_info.value) == "coarsest compute level must be at least 1, got 0"
    with pytest.raises(ConfigurationError) as e_info:
        Discretisation(tree, poisson(2), 2)
    assert str(e_info.value) == "tree depth 1 is below the coarsest compute level 2"
    tree.refine_cell(tree.cell(1, (0, 0)))
    with pytest.raises(ConfigurationError) as e_info:
        Discretisation(tree, poisson(2), 2)
    assert str(e_info.value) == "cell (1, (0, 1)) above the coarsest compute level is unrefined"


def test_discretisation_cache():
    problem = poisson(2)
    tree = Spacetree.build_regular(2, 1, problem)
    disc = Discretisation(tree, problem)
    cell = tree.cell(1, (1, 1))
    tree.refine_cell(cell)
    child = tree.cell(2, (3, 3))
    assert disc.operator(child).shape == (1, 4, 4)
    assert disc.operator(child) is disc.operator(child)
    disc.mass(child)
    tree.erase_subtree(cell)
    disc.forget()
    assert child.key not in disc._operators  # pylint: disable=protected-access
    assert child.key not in disc._masses  # pylint: disable=protected-access


def test_surplus():
    tree = Spacetree.build_regular(1, 2)
    for (level, (i,)), vertex in tree.vertices.items():
        vertex.payload.u[:] = (i / 3**level) ** 2
    cell = tree.cell(2, (1,))
    surplus = kernels.surplus(tree.vertices[(2, (2,))], cell, tree.parent_vertices(cell))
    assert np.allclose(surplus, [-2 / 81])
