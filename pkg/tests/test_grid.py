import numpy as np
import pytest

from spectv.grid import (NumericalError, dirichlet_energy, div, grad,
                         gradient_matrix, laplace_solve_with_constraints,
                         tv_value)

from oracles import laplace_solve_dense, tv_reference


@pytest.mark.parametrize("shape", [(1, 1), (1, 8), (8, 1), (2, 2), (5, 9), (16, 32)])
def test_adjointness_random_fields(rng, shape):
    for _ in range(10):
        u = rng.standard_normal(shape)
        p = rng.standard_normal(shape + (2,))
        lhs = np.sum(grad(u) * p)
        rhs = -np.sum(u * div(p))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_grad_matches_matrix_operator(rng):
    shape = (6, 7)
    d = gradient_matrix(shape).toarray()
    u = rng.standard_normal(shape)
    g = grad(u)
    # matrix rows: x-differences over the first h*(w-1), then y-differences
    h, w = shape
    stacked = np.concatenate([g[:, :-1, 0].ravel(), g[:-1, :, 1].ravel()])
    assert np.allclose(d @ u.ravel(), stacked, atol=1e-14)


def test_div_is_negative_matrix_transpose(rng):
    shape = (5, 6)
    h, w = shape
    d = gradient_matrix(shape).toarray()
    p = rng.standard_normal(shape + (2,))
    rows = np.concatenate([p[:, :-1, 0].ravel(), p[:-1, :, 1].ravel()])
    assert np.allclose(div(p).ravel(), -(d.T @ rows), atol=1e-14)


def test_tv_matches_loop_reference(rng):
    for shape in [(1, 6), (4, 4), (7, 5)]:
        img = rng.standard_normal(shape)
        assert np.isclose(tv_value(img), tv_reference(img), atol=1e-12)


def test_tv_of_centered_square_block():
    img = np.zeros((8, 8))
    img[2:6, 2:6] = 1.0
    expected = 14.0 + np.sqrt(2.0)  # one corner pairs dx and dy
    assert np.isclose(tv_value(img), expected, atol=1e-12)
    assert np.isclose(tv_reference(img), expected, atol=1e-12)


def test_tv_shift_and_scale_invariance(rng):
    img = rng.standard_normal((10, 10))
    assert np.isclose(tv_value(img + 3.7), tv_value(img), atol=1e-10)
    assert np.isclose(tv_value(2.5 * img), 2.5 * tv_value(img), atol=1e-10)
    assert tv_value(np.full((6, 6), 0.4)) == 0.0


def test_laplace_matches_dense_oracle(rng):
    shape = (8, 10)
    constraints = [((1, 2), 0.3), ((7, 1), -1.0), ((4, 6), 2.0), ((9, 7), 0.0)]
    ours = laplace_solve_with_constraints(shape, constraints)
    ref = laplace_solve_dense(shape, constraints)
    assert np.abs(ours - ref).max() <= 1e-8


def test_laplace_respects_constraints():
    shape = (6, 6)
    constraints = [((0, 0), 1.0), ((5, 5), -2.0)]
    w = laplace_solve_with_constraints(shape, constraints)
    assert w[0, 0] == 1.0  # (x, y) -> [row y, col x]
    assert w[5, 5] == -2.0


def test_laplace_energy_minimality(rng):
    shape = (7, 7)
    constraints = [((1, 1), 1.0), ((5, 2), 0.0), ((3, 5), -0.5)]
    w = laplace_solve_with_constraints(shape, constraints)
    base = dirichlet_energy(w)
    fixed = {(1, 1), (2, 5), (5, 3)}  # (row, col) of the constraints
    for _ in range(20):
        bump = np.zeros(shape)
        y, x = rng.integers(0, 7, size=2)
        if (y, x) in fixed:
            continue
        bump[y, x] = rng.standard_normal() * 0.1
        assert dirichlet_energy(w + bump) >= base - 1e-10


def test_laplace_single_constraint_gives_constant():
    w = laplace_solve_with_constraints((5, 5), [((2, 2), 0.7)])
    assert np.allclose(w, 0.7, atol=1e-9)


def test_laplace_constraint_validation():
    with pytest.raises(ValueError):
        laplace_solve_with_constraints((4, 4), [])
    with pytest.raises(ValueError):
        laplace_solve_with_constraints((4, 4), [((4, 0), 1.0)])
    with pytest.raises(ValueError):
        laplace_solve_with_constraints((4, 4), [((1, 1), 1.0), ((1, 1), 2.0)])


def test_laplace_fully_constrained_grid():
    shape = (2, 2)
    constraints = [((x, y), float(x + 10 * y)) for x in range(2) for y in range(2)]
    w = laplace_solve_with_constraints(shape, constraints)
    assert np.allclose(w, [[0.0, 1.0], [10.0, 11.0]])


def test_numerical_error_is_runtime_error():
    assert issubclass(NumericalError, RuntimeError)
