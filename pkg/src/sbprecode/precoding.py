"""Sub-band precoder selection.

For each sub-band the transmit covariance ``C_l`` (average of ``H^H H``
over its subcarriers) is reduced to its dominant eigenpair ``(sigma_l, v_l)``.
A codebook precoder is chosen by full search on ``|v_l^H w|``; the SVD
precoder is ``v_l`` itself. Wide-band precoding runs the same search once on
the whole-band covariance and applies the winner to every sub-band.

The post-processing SNR of sub-band ``l`` is
``P_l * sigma_l * |v_l^H w_l|**2 / noise_var`` with ``P_l = p_total / L``.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .exceptions import ParameterError, StructuralError
from .numerics import DEFAULT_MAX_ITER, DEFAULT_TOL, hermitian_from_upper, herm_dominant_eigpairs

TIE_TOL = 1e-12
SVD_TPMI = -1


class Mode(enum.Enum):
    SB = "SB"
    WB = "WB"


@dataclass(frozen=True)
class SubbandPartition:
    """Contiguous half-open subcarrier ranges ``(start, stop)`` covering the grid."""

    ranges: tuple
    sbs_rbs: int

    def __len__(self):
        return len(self.ranges)

    @property
    def starts(self):
        return np.array([r[0] for r in self.ranges], dtype=np.int64)

    @property
    def sizes(self):
        return np.array([r[1] - r[0] for r in self.ranges], dtype=np.int64)


def partition(spec, sbs_rbs):
    """Split the grid into sub-bands of ``sbs_rbs`` RBs; the last one may be shorter."""
    if not 1 <= sbs_rbs <= spec.n_rbs:
        raise ParameterError(f"sub-band size must be in [1, {spec.n_rbs}] RBs, got {sbs_rbs}")
    width = sbs_rbs * spec.sc_per_rb
    ranges = tuple((lo, min(lo + width, spec.n_sc)) for lo in range(0, spec.n_sc, width))
    return SubbandPartition(ranges, int(sbs_rbs))


def whole_band(spec):
    return partition(spec, spec.n_rbs)


def refinement_map(coarse, fine):
    """Index of the ``coarse`` sub-band containing each ``fine`` sub-band."""
    starts = coarse.starts
    stops = starts + coarse.sizes
    out = np.empty(len(fine), dtype=np.int64)
    for i, (lo, hi) in enumerate(fine.ranges):
        j = int(np.searchsorted(starts, lo, side="right") - 1)
        if j < 0 or hi > stops[j]:
            raise StructuralError(f"sub-band {lo}:{hi} straddles a coarser sub-band boundary")
        out[i] = j
    return out


def _check_range(grid, lo, hi):
    if not 0 <= lo < hi <= grid.spec.n_sc:
        raise ParameterError(f"subcarrier range {lo}:{hi} is empty or outside 0:{grid.spec.n_sc}")


def subband_covariances(grid, part):
    """``(L, n_tx, n_tx)`` stack of per-sub-band average ``H^H H``."""
    h = grid.h
    n_rx, n_tx = grid.n_rx, grid.n_tx
    sizes = part.sizes
    covs = np.empty((len(part), n_tx, n_tx), dtype=np.complex128)
    full = np.flatnonzero(sizes == sizes[0])
    # leading equal-width sub-bands in one batched product, the remainder one by one
    n_full = int(full.size) if np.array_equal(full, np.arange(full.size)) else 0
    if n_full:
        width = int(sizes[0])
        lo = part.ranges[0][0]
        stack = h[lo : lo + n_full * width].reshape(n_full, width * n_rx, n_tx)
        covs[:n_full] = np.conj(np.swapaxes(stack, 1, 2)) @ stack / width
    for i in range(n_full, len(part)):
        lo, hi = part.ranges[i]
        blk = h[lo:hi].reshape((hi - lo) * n_rx, n_tx)
        covs[i] = blk.conj().T @ blk / (hi - lo)
    return hermitian_from_upper(covs)


@dataclass(frozen=True, eq=False)
class SubbandStats:
    cov: np.ndarray
    sigma: float
    v: np.ndarray


@dataclass(frozen=True, eq=False)
class PartitionStats:
    """Array form of :class:`SubbandStats` for every sub-band of a partition."""

    part: SubbandPartition
    covs: np.ndarray
    sigmas: np.ndarray
    vs: np.ndarray

    def __getitem__(self, i):
        return SubbandStats(self.covs[i], float(self.sigmas[i]), self.vs[i])


def partition_stats(grid, part, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    covs = subband_covariances(grid, part)
    sigmas, vs = herm_dominant_eigpairs(covs, tol, max_iter)
    return PartitionStats(part, covs, np.maximum(sigmas, 0.0), vs)


def subband_stats(grid, sc_range):
    """Covariance and dominant eigenpair over one subcarrier range."""
    if isinstance(sc_range, range):
        if sc_range.step != 1:
            raise ParameterError("subcarrier range must be contiguous")
        lo, hi = sc_range.start, sc_range.stop
    else:
        lo, hi = sc_range
    _check_range(grid, lo, hi)
    part = SubbandPartition(((lo, hi),), 0)
    return partition_stats(grid, part)[0]


@dataclass(frozen=True)
class SubbandAssignment:
    """Selected precoder of one sub-band. ``tpmi`` is ``None`` for the SVD precoder."""

    subband_index: int
    tpmi: object
    metric: float
    post_snr_linear: float


def _post_snr(p_l, sigma, metric, noise_var):
    return p_l * sigma * metric * metric / noise_var


def search_codebook(stats, cb, p_l=1.0, noise_var=1.0, subband_index=0):
    """Full search for the entry maximizing ``|v^H w|``; lowest TPMI wins ties."""
    if cb.n_tx != stats.v.shape[0]:
        raise StructuralError(f"codebook is {cb.n_tx}TX but the channel has {stats.v.shape[0]} ports")
    idx, metric = kernels.codebook_search(stats.v[None], cb.weights, TIE_TOL)
    m = min(float(metric[0]), 1.0)
    return SubbandAssignment(subband_index, int(idx[0]), m, _post_snr(p_l, stats.sigma, m, noise_var))


def svd_assignment(stats, p_l=1.0, noise_var=1.0, subband_index=0):
    """Unquantized precoder ``w = v``; the metric is 1 by construction."""
    return SubbandAssignment(subband_index, None, 1.0, _post_snr(p_l, stats.sigma, 1.0, noise_var))


def select(sel_vs, cb):
    """Per-sub-band selection: returns ``(tpmi, weights)`` arrays.

    ``cb=None`` selects the SVD precoder (``tpmi`` is ``SVD_TPMI``).
    """
    if cb is None:
        return np.full(sel_vs.shape[0], SVD_TPMI, dtype=np.int64), sel_vs
    if cb.n_tx != sel_vs.shape[1]:
        raise StructuralError(f"codebook is {cb.n_tx}TX but the channel has {sel_vs.shape[1]} ports")
    tpmi, _ = kernels.codebook_search(sel_vs, cb.weights, TIE_TOL)
    return tpmi, cb.weights[tpmi]


def evaluate(eval_stats, sel_stats, cb, mapping=None):
    """Select on ``sel_stats`` and score on the (finer) ``eval_stats`` partition.

    Returns ``(tpmi, metric)`` per evaluation sub-band, where ``metric`` is
    ``|v_r^H w_{l(r)}|`` with ``l(r)`` the selection sub-band containing
    ``r``. With identical partitions this is plain per-sub-band selection.
    """
    same = eval_stats is sel_stats or eval_stats.part == sel_stats.part
    if mapping is None:
        mapping = np.arange(len(eval_stats.part)) if same else refinement_map(sel_stats.part, eval_stats.part)
    tpmi, weights = select(sel_stats.vs, cb)
    if same and cb is None:
        return tpmi[mapping], np.ones(len(mapping))
    w = weights[mapping]
    metric = np.abs(np.einsum("bi,bi->b", eval_stats.vs.conj(), w))
    return tpmi[mapping], np.minimum(metric, 1.0)


def _assignments(tpmi, metric, sigmas, p_total, noise_var):
    p_l = p_total / len(metric)
    out = []
    for i, (t, m, s) in enumerate(zip(tpmi, metric, sigmas)):
        out.append(
            SubbandAssignment(
                i,
                None if t == SVD_TPMI else int(t),
                float(m),
                _post_snr(p_l, float(s), float(m), noise_var),
            )
        )
    return out


def assign_all(grid, part, cb, mode, p_total, noise_var):
    """Assign a precoder to every sub-band of ``part``.

    ``SB``: independent search per sub-band. ``WB``: one search on the
    whole-band covariance, its winner reused on every sub-band and scored
    there as ``|v_l^H w_WB|``. ``cb=None`` uses the SVD precoder.
    """
    if not p_total > 0 or not noise_var > 0:
        raise ParameterError(f"p_total and noise_var must be positive, got {p_total}, {noise_var}")
    mode = Mode(mode)
    stats = partition_stats(grid, part)
    sel = stats if mode is Mode.SB else partition_stats(grid, whole_band(grid.spec))
    mapping = None if mode is Mode.SB else np.zeros(len(part), dtype=np.int64)
    tpmi, metric = evaluate(stats, sel, cb, mapping)
    return _assignments(tpmi, metric, stats.sigmas, p_total, noise_var)


def format_assignments(assignments):
    """Diagnostics dump, one line per sub-band: ``subband tpmi metric gamma_dB``."""
    lines = []
    for a in assignments:
        tpmi = "svd" if a.tpmi is None else str(a.tpmi)
        g = 10.0 * math.log10(a.post_snr_linear) if a.post_snr_linear > 0 else -math.inf
        lines.append(f"{a.subband_index} {tpmi} {a.metric!r} {g!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_assignments(text):
    out = []
    for ln in text.splitlines():
        if not ln.strip():
            continue
        idx, tpmi, metric, g = ln.split()
        gamma = 0.0 if g == "-inf" else 10.0 ** (float(g) / 10.0)
        out.append(SubbandAssignment(int(idx), None if tpmi == "svd" else int(tpmi), float(metric), gamma))
    return out
