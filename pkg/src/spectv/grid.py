"""Discrete differential operators and inner products on the pixel grid.

Conventions: x is the column index (axis 1), y the row index (axis 0).
Gradients use forward differences with Neumann boundary handling (the
last difference in each direction is zero), and div is the exact
negative adjoint of grad, so <grad u, p> + <u, div p> = 0 holds to
machine precision for every u, p.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

try:
    import pyamg
except ImportError:
    pyamg = None


class NumericalError(RuntimeError):
    """An iterative solve failed to reach its required residual."""


def grad(u):
    """Forward-difference gradient of a single-channel image.

    Returns an (H, W, 2) field, [..., 0] the x-differences and
    [..., 1] the y-differences; the last column/row slots are zero.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2:
        raise ValueError(f"grad expects a single-channel (H, W) image, got {u.shape}")
    g = np.zeros(u.shape + (2,))
    g[:, :-1, 0] = u[:, 1:] - u[:, :-1]
    g[:-1, :, 1] = u[1:, :] - u[:-1, :]
    return g


def div(p):
    """Discrete divergence, the exact negative adjoint of grad.

    The boundary stencil is induced by adjointness: the last column of
    the x-component and last row of the y-component are ignored because
    grad never writes them.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3 or p.shape[2] != 2:
        raise ValueError(f"div expects an (H, W, 2) field, got {p.shape}")
    px, py = p[:, :, 0], p[:, :, 1]
    h, w = p.shape[:2]
    out = np.zeros(p.shape[:2])
    if w > 1:  # a single column has no x-differences
        out[:, 0] += px[:, 0]
        out[:, 1:-1] += px[:, 1:-1] - px[:, :-2]
        out[:, -1] -= px[:, -2]
    if h > 1:
        out[0, :] += py[0, :]
        out[1:-1, :] += py[1:-1, :] - py[:-2, :]
        out[-1, :] -= py[-2, :]
    return out


def tv_value(u):
    """Isotropic total variation: sum over pixels of |grad u|_2."""
    g = grad(u)
    return float(np.sum(np.sqrt(g[:, :, 0] ** 2 + g[:, :, 1] ** 2)))


def gradient_matrix(shape):
    """Sparse forward-difference operator stacking x- and y-differences.

    Rows are ordered x-differences first (H*(W-1) of them), then
    y-differences ((H-1)*W).  Mainly used to build the grid Laplacian
    and by tests that compare against the dense transpose.
    """
    h, w = shape
    def diff1(n):
        if n < 2:
            return sp.csr_matrix((0, n))
        return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n))
    dx = sp.kron(sp.identity(h), diff1(w), format="csr")
    dy = sp.kron(diff1(h), sp.identity(w), format="csr")
    return sp.vstack([dx, dy], format="csr")


def laplace_solve_with_constraints(shape, constraints):
    """Minimize the Dirichlet energy |grad w|_2^2 over an (H, W) grid
    subject to w(pixel) = value at the given constraint pixels.

    Parameters
    ----------
    shape : (H, W)
    constraints : sequence of ((x, y), value)
        Pixel coordinates (column, row) with prescribed values.
        Pixels must be distinct and inside the grid.

    Returns
    -------
    (H, W) ndarray, the constrained minimizer.  The free pixels satisfy
    the discrete Neumann Laplace optimality system to a relative
    residual of 1e-8.
    """
    h, w = shape
    if len(constraints) == 0:
        raise ValueError("at least one constraint is required (constants are TV-free)")
    idx = []
    vals = []
    seen = set()
    for (x, y), value in constraints:
        xi, yi = int(x), int(y)
        if not (0 <= xi < w and 0 <= yi < h):
            raise ValueError(f"constraint pixel ({x}, {y}) outside {w}x{h} grid")
        flat = yi * w + xi
        if flat in seen:
            raise ValueError(f"duplicate constraint pixel ({x}, {y})")
        seen.add(flat)
        idx.append(flat)
        vals.append(float(value))
    idx = np.asarray(idx)
    vals = np.asarray(vals)

    n = h * w
    if len(idx) == n:
        out = np.empty(n)
        out[idx] = vals
        return out.reshape(h, w)

    d = gradient_matrix((h, w))
    lap = (d.T @ d).tocsr()
    free = np.setdiff1d(np.arange(n), idx, assume_unique=False)
    a = lap[free][:, free].tocsr()
    b = -lap[free][:, idx] @ vals

    x0 = np.full(free.shape, vals.mean())
    m = None
    if pyamg is not None and a.shape[0] > 4096:
        m = pyamg.smoothed_aggregation_solver(a).aspreconditioner()
    sol, info = spla.cg(a, b, x0=x0, rtol=1e-12, atol=0.0, maxiter=20 * n, M=m)
    if info != 0:
        raise NumericalError(f"constrained Laplace CG did not converge (info={info})")
    res = np.linalg.norm(a @ sol - b)
    ref = np.linalg.norm(b) if np.linalg.norm(b) > 0 else 1.0
    if res > 1e-8 * ref:
        raise NumericalError(f"constrained Laplace residual {res / ref:.2e} above 1e-8")

    out = np.empty(n)
    out[free] = sol
    out[idx] = vals
    return out.reshape(h, w)


def dirichlet_energy(w):
    """Squared L2 norm of the forward-difference gradient."""
    g = grad(w)
    return float(np.sum(g * g))
