"""Fixed-step RK4 integration backward in time with step-doubling control."""

import numpy as np

from .errors import ConvergenceError, IntegrationError


def _rk4_pass(rhs, y_terminal, grid, substeps):
    """Integrate dy/dt = rhs(y) from grid[-1] down to grid[0].

    Returns an array of shape (len(y), len(grid)) ordered by ascending time.
    """
    n_grid = len(grid)
    out = np.empty((len(y_terminal), n_grid))
    y = np.array(y_terminal, dtype=float)
    out[:, -1] = y
    for i in range(n_grid - 1, 0, -1):
        h = -(grid[i] - grid[i - 1]) / substeps
        t = grid[i]
        for _ in range(substeps):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
            if not np.all(np.isfinite(y)):
                raise IntegrationError(
                    f"non-finite solution at t={t:.6g}", time=float(t))
        out[:, i - 1] = y
    return out


def integrate_backward(rhs, y_terminal, grid, tol=1e-10, max_substeps=4096):
    """Integrate an autonomous system backward from its terminal value.

    The substep count per grid interval doubles until two successive
    trajectories differ by at most ``15 * tol`` (scaled by ``max(1, |y|)``),
    i.e. until the Richardson error estimate of the coarser one is below
    ``tol``. The finer trajectory is returned.

    Returns
    -------
    values : ndarray, shape (n_components, n_grid)
    error_estimate : float
    substeps : int
    """
    grid = np.asarray(grid, dtype=float)
    substeps = 1
    coarse = _rk4_pass(rhs, y_terminal, grid, substeps)
    while True:
        fine = _rk4_pass(rhs, y_terminal, grid, 2 * substeps)
        scale = np.maximum(1.0, np.abs(fine))
        err = float(np.max(np.abs(fine - coarse) / scale)) / 15.0
        substeps *= 2
        if err <= tol:
            return fine, err, substeps
        if substeps >= max_substeps:
            raise ConvergenceError(
                f"step doubling stalled at error estimate {err:.3e} "
                f"with {substeps} substeps per interval", achieved=err)
        coarse = fine
