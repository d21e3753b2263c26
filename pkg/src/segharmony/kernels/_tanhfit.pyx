# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched Tanh curve fitter; same contract as ``_tanhfit_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport tanh, sqrt, fabs, pow, INFINITY

cdef double BETA1 = 0.9
cdef double BETA2 = 0.999
cdef double ADAM_EPS = 1e-8


cdef double _loss_grad(double* p, const double* x, const double* s, Py_ssize_t n,
                       double* g) noexcept nogil:
    cdef double a = p[0], k = p[1], b = p[2], h = p[3]
    cdef double u, t, r, sech2, loss = 0.0
    cdef double ga = 0.0, gk = 0.0, gb = 0.0, gh = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        u = x[i] + b
        t = tanh(k * u)
        r = a * t + h - s[i]
        loss += r * r
        sech2 = 1.0 - t * t
        ga += r * t
        gk += r * a * sech2 * u
        gb += r * a * sech2 * k
        gh += r
    cdef double c = 2.0 / n
    g[0] = c * ga
    g[1] = c * gk
    g[2] = c * gb
    g[3] = c * gh
    return loss / n


def fit_tanh_batch(seqs, double lr=0.1, int max_iter=100, double tol=1e-6):
    cdef double[:, ::1] q = np.ascontiguousarray(seqs, dtype=np.float64)
    if q.ndim != 2:
        raise ValueError("seqs must be 2-D (N, L)")
    cdef Py_ssize_t n = q.shape[0], length = q.shape[1]
    iters_arr = np.zeros(n, dtype=np.int64)
    conv_arr = np.zeros(n, dtype=np.uint8)
    if length < 2:
        params0 = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        return params0, np.array(q, copy=True), iters_arr, conv_arr.astype(bool)

    params_arr = np.empty((n, 4), dtype=np.float64)
    curves_arr = np.empty((n, length), dtype=np.float64)
    s_arr = np.empty(length, dtype=np.float64)
    x_arr = np.empty(length, dtype=np.float64)
    cdef double[:, ::1] params = params_arr
    cdef double[:, ::1] curves = curves_arr
    cdef long long[::1] iters = iters_arr
    cdef unsigned char[::1] conv = conv_arr
    cdef double[::1] s = s_arr
    cdef double[::1] x = x_arr
    cdef double p[4]
    cdef double m[4]
    cdef double v[4]
    cdef double g[4]
    cdef Py_ssize_t r, i, j, best
    cdef Py_ssize_t half = length // 2
    cdef double d, dmax, loss, prev, mhat, vhat, f, c1, c2
    cdef int it, steps

    for i in range(length):
        x[i] = (i + 1) - half

    with nogil:
        for r in range(n):
            for i in range(length):
                s[i] = 2.0 * q[r, i] - 1.0
            best = 0
            dmax = -1.0
            for j in range(length - 1):
                d = fabs(s[j + 1] - s[j])
                if d > dmax:
                    dmax = d
                    best = j
            d = s[best + 1] - s[best]
            p[0] = 1.0
            p[1] = dmax * (1.0 if d > 0 else (-1.0 if d < 0 else 0.0))
            p[2] = -((best + 1) - half + 0.5)
            p[3] = 0.0
            for j in range(4):
                m[j] = 0.0
                v[j] = 0.0
            steps = 0
            conv[r] = 0
            if dmax == 0.0:
                p[0] = 0.0
                p[3] = s[0]
                conv[r] = 1
            loss = _loss_grad(p, &x[0], &s[0], length, g)
            prev = INFINITY
            for it in range(max_iter if conv[r] == 0 else 0):
                if fabs(prev - loss) < tol:
                    conv[r] = 1
                    break
                steps += 1
                c1 = 1.0 - pow(BETA1, steps)
                c2 = 1.0 - pow(BETA2, steps)
                for j in range(4):
                    m[j] = BETA1 * m[j] + (1.0 - BETA1) * g[j]
                    v[j] = BETA2 * v[j] + (1.0 - BETA2) * g[j] * g[j]
                    mhat = m[j] / c1
                    vhat = v[j] / c2
                    p[j] -= lr * mhat / (sqrt(vhat) + ADAM_EPS)
                prev = loss
                loss = _loss_grad(p, &x[0], &s[0], length, g)
            else:
                if fabs(prev - loss) < tol:
                    conv[r] = 1
            iters[r] = steps
            for j in range(4):
                params[r, j] = p[j]
            for i in range(length):
                f = p[0] * tanh(p[1] * (x[i] + p[2])) + p[3]
                f = (f + 1.0) / 2.0
                if f < 0.0:
                    f = 0.0
                elif f > 1.0:
                    f = 1.0
                curves[r, i] = f
    return params_arr, curves_arr, iters_arr, conv_arr.astype(bool)
