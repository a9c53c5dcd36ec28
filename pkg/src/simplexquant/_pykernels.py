"""Pure numpy implementations of the solver inner loops.

These mirror ``_ckernels.pyx`` operation for operation and are used when the
compiled extension is unavailable (or ``SIMPLEXQUANT_PURE_PYTHON=1``).

Both iterative kernels stop when the Frank-Wolfe gap, an upper bound on the
distance to the optimal objective, and the last step length both fall
below ``tol``.
"""
import math

import numpy as np

# smallest denominator admitted under the square root of the Hellinger gradient
ZERO_GUARD = 1e-16
MIN_STEP = 1e-30


def project_simplex(v):
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / idx > 0)
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _quad(D, d, x):
    return 0.5 * x @ D @ x + d @ x


def ls_apg(D, d, x0, lipschitz, tol, max_iter):
    """Monotone accelerated projected gradient for 0.5 x'Dx + d'x on the simplex.

    ``lipschitz`` is a starting estimate of the gradient Lipschitz constant;
    it is doubled whenever the quadratic upper bound is violated.
    Returns ``(x, iterations, converged, objective_history)``.
    """
    D = np.asarray(D, dtype=float)
    d = np.asarray(d, dtype=float)
    L = max(float(lipschitz), 1e-300)
    x = project_simplex(x0)
    fx = _quad(D, d, x)
    yk = x.copy()
    t = 1.0
    history = [fx]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        g = D @ yk + d
        fy = _quad(D, d, yk)
        while True:
            z = project_simplex(yk - g / L)
            diff = z - yk
            fz = _quad(D, d, z)
            bound = fy + g @ diff + 0.5 * L * (diff @ diff)
            if fz <= bound + 1e-15 * (abs(bound) + 1.0) or L > 1e300:
                break
            L *= 2.0
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if fz <= fx:
            x_new, fx_new = z, fz
        else:
            x_new, fx_new = x, fx
        yk = x_new + (t / t_new) * (z - x_new) + ((t - 1.0) / t_new) * (x_new - x)
        x, fx, t = x_new, fx_new, t_new
        history.append(fx)

        gx = D @ x + d
        gap = gx @ x - gx.min()
        step = np.abs(project_simplex(x - gx / L) - x).max()
        if gap <= tol and step <= tol:
            converged = True
            break
    return x, it, converged, np.array(history)


def _hellinger_parts(X, y, w, x, floor):
    z = X @ x
    zf = np.maximum(z + floor, 0.0)
    obj = 0.5 * (w @ (np.sqrt(y) - np.sqrt(zf)) ** 2)
    ratio = np.zeros_like(z)
    pos = y > 0
    ratio[pos] = np.sqrt(y[pos] / np.maximum(zf[pos], ZERO_GUARD))
    grad = 0.5 * (X.T @ (w * (1.0 - ratio)))
    return obj, grad


def hellinger_pgd(X, y, w, x0, floor, tol, max_iter):
    """Projected gradient with backtracking for the squared Hellinger objective.

    Minimizes ``0.5 * sum w_i (sqrt(y_i) - sqrt(z_i + floor))**2`` with
    ``z = X x`` over the simplex.  The line search also checks the secant
    curvature along the step, which only involves gradients and stays
    accurate after objective differences have sunk below rounding.
    Returns ``(x, iterations, converged, objective_history)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    x = project_simplex(x0)
    fx, g = _hellinger_parts(X, y, w, x, floor)
    s = 1.0
    history = [fx]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        s *= 2.0
        while True:
            z = project_simplex(x - s * g)
            diff = z - x
            dd = diff @ diff
            fz, gz = _hellinger_parts(X, y, w, z, floor)
            decrease_ok = fz <= fx + g @ diff + dd / (2.0 * s) + 1e-14 * abs(fx)
            # secant curvature along the step must not exceed 1/s
            curvature_ok = (gz - g) @ diff <= dd / s
            if decrease_ok and curvature_ok:
                break
            s *= 0.5
            if s < MIN_STEP:
                break
        if s < MIN_STEP:
            break
        step = np.abs(diff).max()
        x, fx, g = z, fz, gz
        history.append(fx)
        gap = g @ x - g.min()
        if gap <= tol and step <= tol:
            converged = True
            break
    return x, it, converged, np.array(history)
