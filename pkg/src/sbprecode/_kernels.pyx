# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: batched Hermitian power iteration and codebook search.

Same algorithms and return conventions as ``_kernels_py``. Matrices are
limited to ``NMAX x NMAX``.
"""
import numpy as np
cimport numpy as np

from libc.float cimport DBL_EPSILON
from libc.math cimport sqrt
from scipy.linalg.cython_blas cimport zgemm

np.import_array()

DEF NMAX = 8

cdef double NULL_TOL = 1e-13
cdef int MAX_SQUARINGS = 60
cdef int SEARCH_BLOCK = 16

OK = 0
NOT_CONVERGED = 1


cdef inline double abs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef void matvec(const double complex* a, const double complex* x,
                 double complex* y, int n) noexcept nogil:
    cdef int i, j
    cdef double re, im
    for i in range(n):
        re = 0.0
        im = 0.0
        for j in range(n):
            re = re + a[i * n + j].real * x[j].real - a[i * n + j].imag * x[j].imag
            im = im + a[i * n + j].real * x[j].imag + a[i * n + j].imag * x[j].real
        y[i].real = re
        y[i].imag = im


cdef void square_normalized(double complex* p, int n) noexcept nogil:
    cdef double complex tmp[NMAX * NMAX]
    cdef int i, j, k
    cdef double re, im, mx = 0.0, a
    for i in range(n):
        for j in range(n):
            re = 0.0
            im = 0.0
            for k in range(n):
                re = re + p[i * n + k].real * p[k * n + j].real - p[i * n + k].imag * p[k * n + j].imag
                im = im + p[i * n + k].real * p[k * n + j].imag + p[i * n + k].imag * p[k * n + j].real
            tmp[i * n + j].real = re
            tmp[i * n + j].imag = im
            a = sqrt(re * re + im * im)
            if a > mx:
                mx = a
    for i in range(n * n):
        p[i].real = tmp[i].real / mx
        p[i].imag = tmp[i].imag / mx


cdef bint certified(const double complex* m, double lam, double tol,
                    double scale, int n) noexcept nogil:
    # Cholesky of (lam + shift) I - m succeeds iff no eigenvalue exceeds lam + shift
    cdef double complex low[NMAX * NMAX]
    cdef double complex s
    cdef double d, ljj
    cdef double shift = tol * (lam if lam > 1.0 else 1.0)
    cdef double floor_ = 64.0 * DBL_EPSILON * n * scale
    cdef int i, j, k
    if floor_ > shift:
        shift = floor_
    for j in range(n):
        d = lam + shift - m[j * n + j].real
        for k in range(j):
            d -= abs2(low[j * n + k])
        if d <= 0.0:
            return False
        ljj = sqrt(d)
        low[j * n + j].real = ljj
        low[j * n + j].imag = 0.0
        for i in range(j + 1, n):
            s.real = -m[i * n + j].real
            s.imag = -m[i * n + j].imag
            for k in range(j):
                # s -= low[i,k] * conj(low[j,k])
                s.real -= low[i * n + k].real * low[j * n + k].real + low[i * n + k].imag * low[j * n + k].imag
                s.imag -= low[i * n + k].imag * low[j * n + k].real - low[i * n + k].real * low[j * n + k].imag
            low[i * n + j].real = s.real / ljj
            low[i * n + j].imag = s.imag / ljj
    return True


cdef int eig_one(const double complex* m, int n, double tol, long max_iter,
                 double* val, double complex* vec) noexcept nogil:
    cdef double complex p[NMAX * NMAX]
    cdef double complex x[NMAX]
    cdef double complex y[NMAX]
    cdef double complex z[NMAX]
    cdef double scale = 0.0, a, ny, lam, res, inv
    cdef int i, start, n_sq
    cdef long it
    cdef bint dropped

    for i in range(n * n):
        a = sqrt(abs2(m[i]))
        if a > scale:
            scale = a
    if scale == 0.0:
        val[0] = 0.0
        for i in range(n):
            vec[i].real = 1.0 / sqrt(<double>n)
            vec[i].imag = 0.0
        return 0

    # start 0 is the all-ones vector, starts 1..n are the unit vectors
    for start in range(n + 1):
        for i in range(n * n):
            p[i].real = m[i].real / scale
            p[i].imag = m[i].imag / scale
        for i in range(n):
            x[i].imag = 0.0
            if start == 0:
                x[i].real = 1.0 / sqrt(<double>n)
            else:
                x[i].real = 1.0 if i == start - 1 else 0.0
        n_sq = 0
        dropped = False
        for it in range(1, max_iter + 1):
            matvec(p, x, y, n)
            ny = 0.0
            for i in range(n):
                ny += abs2(y[i])
            ny = sqrt(ny)
            if ny < NULL_TOL:
                dropped = True
                break
            inv = 1.0 / ny
            for i in range(n):
                x[i].real = y[i].real * inv
                x[i].imag = y[i].imag * inv

            matvec(m, x, z, n)
            lam = 0.0
            for i in range(n):
                lam += x[i].real * z[i].real + x[i].imag * z[i].imag
            res = 0.0
            for i in range(n):
                res += (z[i].real - lam * x[i].real) ** 2 + (z[i].imag - lam * x[i].imag) ** 2
            res = sqrt(res)
            if res <= tol * (lam if lam > 1.0 else 1.0):
                if certified(m, lam, tol, scale, n):
                    val[0] = lam
                    for i in range(n):
                        vec[i] = x[i]
                    return 0
                dropped = True
                break

            if it % 2 == 0 and n_sq < MAX_SQUARINGS:
                square_normalized(p, n)
                n_sq += 1
        if not dropped:
            return 1
    return 1


def dominant_eigpairs(mats, double tol, long max_iter):
    """Dominant eigenpair of each Hermitian matrix in a ``(B, n, n)`` stack."""
    cdef const double complex[:, :, ::1] mv = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef Py_ssize_t nb = mv.shape[0], b
    cdef int n = <int>mv.shape[1]
    if n > NMAX or mv.shape[2] != n:
        raise ValueError(f"compiled kernel supports square matrices up to {NMAX}x{NMAX}")
    vals_arr = np.zeros(nb)
    vecs_arr = np.zeros((nb, n), dtype=np.complex128)
    status_arr = np.zeros(nb, dtype=np.int8)
    cdef double[::1] vals = vals_arr
    cdef double complex[:, ::1] vecs = vecs_arr
    cdef signed char[::1] status = status_arr
    with nogil:
        for b in range(nb):
            status[b] = eig_one(&mv[b, 0, 0], n, tol, max_iter, &vals[b], &vecs[b, 0])
    return vals_arr, vecs_arr, status_arr


def codebook_search(vs, weights, double tie_tol):
    """Best codebook entry per row of ``vs`` under ``|v^H w|``, lowest index on ties."""
    vs = np.asarray(vs, dtype=np.complex128)
    cdef double complex[:, ::1] vc = np.ascontiguousarray(vs.conj())
    cdef const double complex[:, ::1] w = np.ascontiguousarray(weights, dtype=np.complex128)
    if w.shape[1] != vc.shape[1]:
        raise ValueError("dimension mismatch between vectors and codebook")
    cdef int nb = <int>vc.shape[0], nk = <int>w.shape[0], n = <int>vc.shape[1]
    cdef int lo, rows, r, k
    idx_arr = np.empty(nb, dtype=np.int64)
    metric_arr = np.empty(nb)
    cdef long long[::1] idx = idx_arr
    cdef double[::1] metric = metric_arr
    cdef double complex[:, ::1] g = np.empty((SEARCH_BLOCK, nk), dtype=np.complex128)
    cdef double complex one = 1.0, zero = 0.0
    cdef char ta = b'T', tb = b'N'
    cdef const double complex* row
    cdef double m2, best2, cut
    if nb == 0 or nk == 0:
        return idx_arr, metric_arr
    with nogil:
        lo = 0
        while lo < nb:
            rows = nb - lo if nb - lo < SEARCH_BLOCK else SEARCH_BLOCK
            # column-major view: G^T (nk x rows) = W (nk x n) . conj(V)^T (n x rows)
            zgemm(&ta, &tb, &nk, &rows, &n, &one, &w[0, 0], &n,
                  &vc[lo, 0], &n, &zero, &g[0, 0], &nk)
            for r in range(rows):
                row = &g[r, 0]
                best2 = -1.0
                for k in range(nk):
                    m2 = row[k].real * row[k].real + row[k].imag * row[k].imag
                    if m2 > best2:
                        best2 = m2
                # ties: metric >= best - tie_tol, compared on squares
                cut = sqrt(best2) - tie_tol
                cut = cut * cut if cut > 0.0 else -1.0
                for k in range(nk):
                    m2 = row[k].real * row[k].real + row[k].imag * row[k].imag
                    if m2 >= cut:
                        idx[lo + r] = k
                        metric[lo + r] = sqrt(m2)
                        break
            lo += rows
    return idx_arr, metric_arr
