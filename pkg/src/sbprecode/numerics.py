"""Small dense complex linear algebra: dominant eigenpairs, Kronecker, Gram.

Vectors and matrices are plain ``complex128`` NumPy arrays. Sizes are at
most 8x8 throughout the package.
"""
import numpy as np

from ._backend import kernels
from .exceptions import ConvergenceError, StructuralError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000

# entries below this modulus (relative to a unit vector) are treated as zero
# when fixing the eigenvector phase
PHASE_ZERO = 1e-9


def canonical_phase(vecs):
    """Rotate each row so its first non-negligible entry is real and >= 0.

    Accepts a single vector or a ``(B, n)`` stack; returns a new array.
    """
    v = np.array(vecs, dtype=np.complex128)
    flat = v.reshape(-1, v.shape[-1])
    if flat.shape[0] == 0:
        return v
    mag = np.abs(flat)
    scale = np.maximum(np.linalg.norm(flat, axis=1), np.finfo(float).tiny)
    first = np.argmax(mag > PHASE_ZERO * scale[:, None], axis=1)
    rows = np.arange(flat.shape[0])
    pivot = flat[rows, first]
    pmag = np.abs(pivot)
    rot = np.where(pmag > 0, pivot.conj() / np.where(pmag > 0, pmag, 1.0), 1.0)
    flat *= rot[:, None]
    flat[rows, first] = pmag
    return flat.reshape(v.shape)


def _check_hermitian(mats, tol):
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise StructuralError(f"expected square matrices, got shape {mats.shape[-2:]}")
    if mats.shape[1] == 0:
        raise StructuralError("empty matrix")
    if mats.shape[0] == 0:
        return
    dev = np.abs(mats - np.conj(np.swapaxes(mats, 1, 2))).max(axis=(1, 2))
    scale = np.maximum(1.0, np.abs(mats).max(axis=(1, 2)))
    bad = np.flatnonzero(dev > tol * scale)
    if bad.size:
        raise StructuralError(
            f"matrix {bad[0]} is not Hermitian (max |M - M^H| = {dev[bad[0]]:.3g})"
        )


def herm_dominant_eigpairs(mats, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Batched :func:`herm_dominant_eigpair` over a ``(B, n, n)`` stack.

    Returns ``(values, vectors)`` with shapes ``(B,)`` and ``(B, n)``.
    """
    mats = np.asarray(mats, dtype=np.complex128)
    _check_hermitian(mats, tol)
    vals, vecs, status = kernels.dominant_eigpairs(mats, float(tol), int(max_iter))
    failed = np.flatnonzero(status)
    if failed.size:
        raise ConvergenceError(
            f"power iteration did not converge for {failed.size} matrix(es) "
            f"(first: {failed[0]}) within {max_iter} iterations"
        )
    return vals, canonical_phase(vecs)


def herm_dominant_eigpair(m, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Largest eigenvalue and its unit eigenvector of a Hermitian PSD matrix.

    Power iteration from the all-ones start vector with the Rayleigh quotient
    as the eigenvalue estimate. The iterate matrix is squared every other
    step, so convergence needs O(log) rather than O(1/gap) iterations. A
    Cholesky factorisation of ``(value + shift) I - m`` certifies that the
    returned eigenvalue is the largest; if a start vector is orthogonal to
    the dominant eigenspace the unit vectors are tried in turn.

    When the dominant eigenvalue is repeated any vector of that eigenspace
    may be returned. The eigenvector phase is fixed so its first
    non-negligible entry is real and non-negative.

    Returns
    -------
    value : float
    vector : ndarray of complex, shape (n,)
        Satisfies ``||m v - value v|| <= tol * max(1, value)``.

    Raises
    ------
    StructuralError
        If ``m`` is not square or not Hermitian within ``tol``.
    ConvergenceError
        If no start vector converges within ``max_iter`` iterations.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2:
        raise StructuralError(f"expected a matrix, got {m.ndim} dimension(s)")
    vals, vecs = herm_dominant_eigpairs(m[None], tol, max_iter)
    return float(vals[0]), vecs[0]


def kron(a, b):
    """Kronecker product of two vectors: ``out[i*len(b) + j] = a[i] * b[j]``."""
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    return (a[:, None] * b[None, :]).ravel()


def hermitian_from_upper(g):
    """Copy the conjugated upper triangle of each matrix onto its lower triangle.

    The diagonal is made exactly real. Works on single matrices and stacks.
    """
    g = np.array(g, dtype=np.complex128)
    n = g.shape[-1]
    lo = np.tril_indices(n, -1)
    gt = np.swapaxes(g, -1, -2)
    g[..., lo[0], lo[1]] = np.conj(gt[..., lo[0], lo[1]])
    d = np.arange(n)
    g[..., d, d] = g[..., d, d].real
    return g


def gram(h):
    """``H^H H`` for a matrix ``h`` (or a stack of them).

    A 1-D ``h`` is read as a single-receive-antenna channel (one row), which
    gives the outer product ``conj(h) h^T``. Only the upper triangle is
    computed from ``h``; the lower triangle is its exact conjugate, so the
    result equals its own conjugate transpose bit for bit.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 1:
        h = h[None, :]
    return hermitian_from_upper(np.conj(np.swapaxes(h, -1, -2)) @ h)
