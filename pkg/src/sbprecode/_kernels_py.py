"""NumPy implementation of the hot kernels.

Used when the compiled ``_kernels`` extension is not available. Both
backends run the same algorithm; results agree to floating-point rounding.
"""
import numpy as np

NULL_TOL = 1e-13
MAX_SQUARINGS = 60
SEARCH_CHUNK = 64

OK = 0
NOT_CONVERGED = 1
UNRESOLVED = 2


def _start_vectors(n):
    yield np.full(n, 1.0 / np.sqrt(n), dtype=np.complex128)
    for k in range(n):
        e = np.zeros(n, dtype=np.complex128)
        e[k] = 1.0
        yield e


def _certified(m, lam, tol, scale):
    # lam is dominant iff (lam + shift) I - m is positive definite
    n = m.shape[0]
    shift = max(tol * max(1.0, lam), 64.0 * np.finfo(float).eps * n * scale)
    s = (lam + shift) * np.eye(n) - m
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return False
    return True


def dominant_eigpairs(mats, tol, max_iter):
    """Dominant eigenpair of each Hermitian matrix in a ``(B, n, n)`` stack.

    Returns ``(values, vectors, status)``; ``status[b]`` is 0 on success and
    non-zero when matrix ``b`` did not converge. Vectors are unit norm with
    arbitrary phase.
    """
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    nb, n, _ = mats.shape
    vals = np.zeros(nb)
    vecs = np.zeros((nb, n), dtype=np.complex128)
    status = np.full(nb, UNRESOLVED, dtype=np.int8)
    if nb == 0:
        return vals, vecs, status

    scale = np.abs(mats).max(axis=(1, 2))
    zero = scale == 0.0
    vecs[zero] = 1.0 / np.sqrt(n)
    status[zero] = OK

    for start in _start_vectors(n):
        todo = np.flatnonzero(status == UNRESOLVED)
        if todo.size == 0:
            break
        m = mats[todo]
        p = m / scale[todo, None, None]
        x = np.tile(start, (todo.size, 1))
        live = np.arange(todo.size)
        n_sq = 0
        for it in range(1, max_iter + 1):
            if live.size == 0:
                break
            y = np.einsum("bij,bj->bi", p[live], x[live])
            ny = np.linalg.norm(y, axis=1)
            keep = ny >= NULL_TOL
            live, y, ny = live[keep], y[keep], ny[keep]
            x[live] = y / ny[:, None]

            z = np.einsum("bij,bj->bi", m[live], x[live])
            lam = np.einsum("bi,bi->b", x[live].conj(), z).real
            res = np.linalg.norm(z - lam[:, None] * x[live], axis=1)
            conv = res <= tol * np.maximum(1.0, lam)
            for j in np.flatnonzero(conv):
                b = live[j]
                if _certified(m[b], lam[j], tol, scale[todo[b]]):
                    vals[todo[b]] = lam[j]
                    vecs[todo[b]] = x[b]
                    status[todo[b]] = OK
            live = live[~conv]

            if it % 2 == 0 and n_sq < MAX_SQUARINGS and live.size:
                q = p[live] @ p[live]
                q /= np.abs(q).max(axis=(1, 2))[:, None, None]
                p[live] = q
                n_sq += 1
        else:
            status[todo[live]] = NOT_CONVERGED

    status[status == UNRESOLVED] = NOT_CONVERGED
    return vals, vecs, status


def codebook_search(vs, weights, tie_tol):
    """Best codebook entry for each row of ``vs`` under ``|v^H w|``.

    Entries whose metric is within ``tie_tol`` of the maximum count as ties;
    the lowest index among them wins.
    """
    vs = np.ascontiguousarray(vs, dtype=np.complex128)
    weights = np.ascontiguousarray(weights, dtype=np.complex128)
    nb = vs.shape[0]
    idx = np.empty(nb, dtype=np.int64)
    metric = np.empty(nb)
    wt = weights.T
    for lo in range(0, nb, SEARCH_CHUNK):
        hi = min(lo + SEARCH_CHUNK, nb)
        mags = np.abs(vs[lo:hi].conj() @ wt)
        best = mags.max(axis=1)
        sel = np.argmax(mags >= (best - tie_tol)[:, None], axis=1)
        idx[lo:hi] = sel
        metric[lo:hi] = mags[np.arange(hi - lo), sel]
    return idx, metric
