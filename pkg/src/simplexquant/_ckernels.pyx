# cython: language_level=3
"""Compiled solver inner loops; see ``_pykernels`` for the reference version."""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt, fabs
from libc.stdlib cimport qsort

cnp.import_array()

cdef double ZERO_GUARD = 1e-16
cdef double MIN_STEP = 1e-30


cdef int _cmp_desc(const void* a, const void* b) noexcept nogil:
    cdef double da = (<double*>a)[0]
    cdef double db = (<double*>b)[0]
    if da < db:
        return 1
    if da > db:
        return -1
    return 0


cdef void _project(const double* v, double* out, double* work, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t j, rho = 0
    cdef double css = 0.0, css_rho = 0.0, theta
    for j in range(n):
        work[j] = v[j]
    qsort(work, n, sizeof(double), _cmp_desc)
    for j in range(n):
        css += work[j]
        if work[j] - (css - 1.0) / (j + 1) > 0:
            rho = j + 1
            css_rho = css - 1.0
    theta = css_rho / rho
    for j in range(n):
        out[j] = v[j] - theta
        if out[j] < 0.0:
            out[j] = 0.0


def project_simplex(v):
    cdef double[::1] src = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = src.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] dst = out
    cdef double[::1] work = np.empty(n, dtype=np.float64)
    with nogil:
        _project(&src[0], &dst[0], &work[0], n)
    return out


cdef double _quad(const double[:, ::1] D, const double[::1] d, const double* x, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0, row
    for i in range(k):
        row = 0.0
        for j in range(k):
            row += D[i, j] * x[j]
        acc += x[i] * (0.5 * row + d[i])
    return acc


cdef void _grad_quad(const double[:, ::1] D, const double[::1] d, const double* x, double* g, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double row
    for i in range(k):
        row = d[i]
        for j in range(k):
            row += D[i, j] * x[j]
        g[i] = row


def ls_apg(D_in, d_in, x0, double lipschitz, double tol, int max_iter):
    cdef const double[:, ::1] D = np.ascontiguousarray(D_in, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(d_in, dtype=np.float64)
    cdef Py_ssize_t k = d.shape[0], i
    cdef double[::1] x = project_simplex(x0)
    cdef double[::1] x_new = np.empty(k)
    cdef double[::1] yk = np.array(x, copy=True)
    cdef double[::1] z = np.empty(k)
    cdef double[::1] g = np.empty(k)
    cdef double[::1] tmp = np.empty(k)
    cdef double[::1] work = np.empty(k)
    hist_arr = np.empty(max_iter + 1)
    cdef double[::1] hist = hist_arr
    cdef double L = lipschitz if lipschitz > 1e-300 else 1e-300
    cdef double t = 1.0, t_new, fx, fy, fz, bound, dg, dd, gap, gmin, step, diff, a, b
    cdef int it = 0
    cdef bint converged = False
    with nogil:
        fx = _quad(D, d, &x[0], k)
        hist[0] = fx
        while it < max_iter:
            it += 1
            _grad_quad(D, d, &yk[0], &g[0], k)
            fy = _quad(D, d, &yk[0], k)
            while True:
                for i in range(k):
                    tmp[i] = yk[i] - g[i] / L
                _project(&tmp[0], &z[0], &work[0], k)
                dg = 0.0
                dd = 0.0
                for i in range(k):
                    diff = z[i] - yk[i]
                    dg += g[i] * diff
                    dd += diff * diff
                fz = _quad(D, d, &z[0], k)
                bound = fy + dg + 0.5 * L * dd
                if fz <= bound + 1e-15 * (fabs(bound) + 1.0) or L > 1e300:
                    break
                L *= 2.0
            t_new = 0.5 * (1.0 + sqrt(1.0 + 4.0 * t * t))
            a = t / t_new
            b = (t - 1.0) / t_new
            if fz <= fx:
                for i in range(k):
                    x_new[i] = z[i]
                fx = fz
            else:
                for i in range(k):
                    x_new[i] = x[i]
            for i in range(k):
                yk[i] = x_new[i] + a * (z[i] - x_new[i]) + b * (x_new[i] - x[i])
                x[i] = x_new[i]
            t = t_new
            hist[it] = fx

            _grad_quad(D, d, &x[0], &g[0], k)
            gap = 0.0
            gmin = g[0]
            for i in range(k):
                gap += g[i] * x[i]
                if g[i] < gmin:
                    gmin = g[i]
                tmp[i] = x[i] - g[i] / L
            gap -= gmin
            _project(&tmp[0], &z[0], &work[0], k)
            step = 0.0
            for i in range(k):
                diff = fabs(z[i] - x[i])
                if diff > step:
                    step = diff
            if gap <= tol and step <= tol:
                converged = True
                break
    return np.asarray(x).copy(), it, bool(converged), hist_arr[: it + 1].copy()


cdef double _hel_obj(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                     const double* x, double* zbuf, double floor,
                     Py_ssize_t m, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t r, j
    cdef double zr, zf, dev, acc = 0.0
    for r in range(m):
        zr = 0.0
        for j in range(k):
            zr += X[r, j] * x[j]
        zbuf[r] = zr
        zf = zr + floor
        if zf < 0.0:
            zf = 0.0
        dev = sqrt(y[r]) - sqrt(zf)
        acc += w[r] * dev * dev
    return 0.5 * acc


cdef void _hel_grad(const double[:, ::1] X, const double[::1] y, const double[::1] w,
                    const double* zbuf, double* g, double floor,
                    Py_ssize_t m, Py_ssize_t k) noexcept nogil:
    cdef Py_ssize_t r, j
    cdef double zf, coef
    for j in range(k):
        g[j] = 0.0
    for r in range(m):
        if y[r] > 0.0:
            zf = zbuf[r] + floor
            if zf < ZERO_GUARD:
                zf = ZERO_GUARD
            coef = w[r] * (1.0 - sqrt(y[r] / zf))
        else:
            coef = w[r]
        for j in range(k):
            g[j] += coef * X[r, j]
    for j in range(k):
        g[j] *= 0.5


def hellinger_pgd(X_in, y_in, w_in, x0, double floor, double tol, int max_iter):
    cdef const double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef const double[::1] y = np.ascontiguousarray(y_in, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], k = X.shape[1], i
    cdef double[::1] x = project_simplex(x0)
    cdef double[::1] z = np.empty(k)
    cdef double[::1] g = np.empty(k)
    cdef double[::1] gz = np.empty(k)
    cdef double[::1] tmp = np.empty(k)
    cdef double[::1] work = np.empty(k)
    cdef double[::1] zbuf = np.empty(m)
    hist_arr = np.empty(max_iter + 1)
    cdef double[::1] hist = hist_arr
    cdef double s = 1.0, fx, fz, dg, dd, curv, diff, step, gap, gmin
    cdef int it = 0
    cdef bint converged = False
    with nogil:
        fx = _hel_obj(X, y, w, &x[0], &zbuf[0], floor, m, k)
        _hel_grad(X, y, w, &zbuf[0], &g[0], floor, m, k)
        hist[0] = fx
        while it < max_iter:
            it += 1
            s *= 2.0
            while True:
                for i in range(k):
                    tmp[i] = x[i] - s * g[i]
                _project(&tmp[0], &z[0], &work[0], k)
                fz = _hel_obj(X, y, w, &z[0], &zbuf[0], floor, m, k)
                _hel_grad(X, y, w, &zbuf[0], &gz[0], floor, m, k)
                dg = 0.0
                dd = 0.0
                curv = 0.0
                for i in range(k):
                    diff = z[i] - x[i]
                    dg += g[i] * diff
                    dd += diff * diff
                    curv += (gz[i] - g[i]) * diff
                if fz <= fx + dg + dd / (2.0 * s) + 1e-14 * fabs(fx) and curv <= dd / s:
                    break
                s *= 0.5
                if s < MIN_STEP:
                    break
            if s < MIN_STEP:
                break
            step = 0.0
            for i in range(k):
                diff = fabs(z[i] - x[i])
                if diff > step:
                    step = diff
                x[i] = z[i]
                g[i] = gz[i]
            fx = fz
            hist[it] = fx
            gap = 0.0
            gmin = g[0]
            for i in range(k):
                gap += g[i] * x[i]
                if g[i] < gmin:
                    gmin = g[i]
            gap -= gmin
            if gap <= tol and step <= tol:
                converged = True
                break
    return np.asarray(x).copy(), it, bool(converged), hist_arr[: it + 1].copy()
