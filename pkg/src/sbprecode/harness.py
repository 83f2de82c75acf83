"""Seeded Monte-Carlo BLER sweeps over precoding schemes.

Every scheme sees the same channel realizations, and each transport block
uses one uniform draw shared by all schemes and SNR points (common random
numbers). Trial ``t`` owns the random streams ``(seed, channel, t)`` and
``(seed, tb, t)``, so results do not depend on worker count or scheduling.

SNR convention: ``snr = p_total / noise_var`` with unit total noise spread
evenly over the band and unit average channel gain per antenna pair. Every
series is scored per resource block: the post-processing SNR of RB ``r`` is
``snr * sigma_r * |v_r^H w_{l(r)}|**2`` where ``w_{l(r)}`` is the precoder
chosen for the selection sub-band containing ``r``.
"""
import csv
import logging
import math
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import rng as rng_streams
from ._backend import BACKEND
from .channel import generate_realization
from .exceptions import ParameterError
from .linkabs import BlerPoint, effective_snr, tb_error_prob
from .precoding import Mode, evaluate, partition, partition_stats, refinement_map, whole_band

log = logging.getLogger(__name__)

CHUNK = 16
SNR_DEFINITION = "snr = p_total/noise_var; unit total noise; unit average channel gain per rx-tx pair"


@dataclass(frozen=True)
class Series:
    """A curve to simulate: codebook spec, selection granularity (None = wide-band)."""

    name: str
    codebook: str
    select_sbs: object


@dataclass
class SweepResult:
    series: dict
    metadata: dict = field(default_factory=dict)

    def points(self, name):
        return self.series[name]

    def bler(self, name):
        return np.array([p.bler for p in self.series[name]])

    def snr_db(self, name):
        return np.array([p.snr_db for p in self.series[name]])


def _series_for_schemes(cfg, sbs=None, suffix=False):
    sbs = cfg.sbs_rbs if sbs is None else sbs
    out = []
    for s in cfg.schemes:
        select = None if s.mode is Mode.WB else sbs
        name = f"{s.name}@sbs={sbs}" if suffix else s.name
        out.append(Series(name, s.codebook, select))
    return out


class _TrialRunner:
    """Evaluates single trials; built once per process."""

    def __init__(self, cfg, series):
        from .config import Scheme

        self.cfg = cfg
        self.series = series
        self.profile = cfg.profile
        self.codebooks = [Scheme(Mode.SB, s.codebook).build(cfg.n_tx) for s in series]
        self.eval_part = partition(cfg.grid, 1)
        self.sel_parts = {}
        self.maps = {}
        for s in series:
            key = s.select_sbs
            if key in self.sel_parts:
                continue
            part = whole_band(cfg.grid) if key is None else partition(cfg.grid, key)
            self.sel_parts[key] = part
            self.maps[key] = refinement_map(part, self.eval_part)
        self.snr_lin = 10.0 ** (np.array(cfg.snr_grid_db) / 10.0)

    def gains(self, index):
        """Per-RB SNR gain ``sigma_r * metric_r**2`` and metrics, shape ``(S, R)``."""
        cfg = self.cfg
        grid = generate_realization(cfg.grid, self.profile, cfg.n_rx, cfg.n_tx, cfg.seed, index)
        eval_stats = partition_stats(grid, self.eval_part)
        sel_stats = {}
        for key, part in self.sel_parts.items():
            sel_stats[key] = eval_stats if part == self.eval_part else partition_stats(grid, part)
        metrics = np.empty((len(self.series), len(self.eval_part)))
        for i, (s, cb) in enumerate(zip(self.series, self.codebooks)):
            _, metrics[i] = evaluate(eval_stats, sel_stats[s.select_sbs], cb, self.maps[s.select_sbs])
        return eval_stats.sigmas[None, :] * metrics**2, metrics

    def run(self, index):
        gains, metrics = self.gains(index)
        gam = self.snr_lin[None, :, None] * gains[:, None, :]
        p_err = tb_error_prob(effective_snr(gam), self.cfg.mcs)
        u = rng_streams.stream(self.cfg.seed, rng_streams.TB_DRAW, index).random()
        return u < p_err, metrics.mean(axis=1)


_WORKER = None


def _init_worker(cfg, series):
    global _WORKER
    _WORKER = _TrialRunner(cfg, series)


def _run_chunk(bounds):
    lo, hi = bounds
    errs, metrics = zip(*(_WORKER.run(t) for t in range(lo, hi)))
    return lo, np.sum(errs, axis=0), np.array(metrics)


def _simulate(cfg, series, workers=1):
    chunks = [(lo, min(lo + CHUNK, cfg.n_tbs)) for lo in range(0, cfg.n_tbs, CHUNK)]
    n_snr = len(cfg.snr_grid_db)
    errors = np.zeros((len(series), n_snr), dtype=np.int64)
    metric_rows = np.empty((cfg.n_tbs, len(series)))
    if workers <= 1:
        _init_worker(cfg, series)
        results = map(_run_chunk, chunks)
        executor = None
    else:
        ctx = multiprocessing.get_context("spawn")
        executor = ProcessPoolExecutor(workers, mp_context=ctx, initializer=_init_worker, initargs=(cfg, series))
        results = executor.map(_run_chunk, chunks)
    try:
        for lo, err, met in results:
            errors += err
            metric_rows[lo : lo + len(met)] = met
    finally:
        if executor is not None:
            executor.shutdown()
    return errors, metric_rows


def _result(cfg, series, errors, metric_rows, started, workers):
    snrs = cfg.snr_grid_db
    out = {}
    for i, s in enumerate(series):
        out[s.name] = [BlerPoint(snr, cfg.n_tbs, int(e)) for snr, e in zip(snrs, errors[i])]
    meta = {
        "version": __version__,
        "backend": BACKEND,
        "workers": workers,
        "wall_time_s": time.perf_counter() - started,
        "snr_definition": SNR_DEFINITION,
        "config": cfg.to_text(),
        "mean_metric": {s.name: float(metric_rows[:, i].mean()) for i, s in enumerate(series)},
    }
    return SweepResult(out, meta)


def run_sweep(cfg, workers=1):
    """BLER versus SNR for every scheme in ``cfg`` on paired realizations."""
    started = time.perf_counter()
    series = _series_for_schemes(cfg)
    log.info("sweep: %d schemes, %d TBs, %d SNR points", len(series), cfg.n_tbs, len(cfg.snr_grid_db))
    errors, metrics = _simulate(cfg, series, workers)
    return _result(cfg, series, errors, metrics, started, workers)


def sbs_study(cfg, sbs_list=None, workers=1):
    """One series per (SB scheme, sub-band size), all on the same realizations.

    ``metadata["mean_metric"]`` holds the mean per-RB metric of each series.
    """
    started = time.perf_counter()
    sbs_list = tuple(cfg.sbs_list if sbs_list is None else sbs_list)
    for s in sbs_list:
        if not 1 <= s <= cfg.grid.n_rbs:
            raise ParameterError(f"sub-band size {s} outside [1, {cfg.grid.n_rbs}]")
    sb_schemes = [s for s in cfg.schemes if s.mode is Mode.SB]
    if not sb_schemes:
        raise ParameterError("sbs study needs at least one SB scheme")
    sub = cfg.replace(schemes=tuple(sb_schemes))
    series = [s for sbs in sbs_list for s in _series_for_schemes(sub, sbs, suffix=True)]
    errors, metrics = _simulate(cfg, series, workers)
    res = _result(cfg, series, errors, metrics, started, workers)
    res.metadata["sbs_list"] = list(sbs_list)
    return res


def snr_at_bler(points, target=0.1):
    """SNR where a BLER curve first falls below ``target``.

    Log-linear interpolation between the bracketing points; a zero BLER is
    floored at half an error for the interpolation. Returns ``None`` if the
    curve never crosses ``target``.
    """
    pts = sorted(points, key=lambda p: p.snr_db)
    for a, b in zip(pts, pts[1:]):
        if a.bler >= target > b.bler:
            la = math.log10(a.bler)
            lb = math.log10(max(b.bler, 0.5 / b.trials))
            lt = math.log10(target)
            if la == lb:
                return a.snr_db
            return a.snr_db + (lt - la) * (b.snr_db - a.snr_db) / (lb - la)
    return None


def gain_db(result, scheme, baseline, target=0.1):
    """Horizontal gap (dB) of ``scheme`` over ``baseline`` at BLER ``target``."""
    a = snr_at_bler(result.points(baseline), target)
    b = snr_at_bler(result.points(scheme), target)
    if a is None or b is None:
        return None
    return a - b


def _fmt(x):
    return f"{x:.6g}"


def format_csv(result):
    rows = ["scheme,snr_db,trials,errors,bler"]
    for name in sorted(result.series):
        for p in sorted(result.series[name], key=lambda p: p.snr_db):
            rows.append(f"{name},{_fmt(p.snr_db)},{p.trials},{p.errors},{_fmt(p.bler)}")
    return "\n".join(rows) + "\n"


def emit_csv(result, path):
    """Write ``scheme,snr_db,trials,errors,bler`` rows sorted by (scheme, snr_db)."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(result))
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write CSV to {path}: {exc.strerror}") from exc


def read_csv(path):
    """Parse an emitted CSV back into ``{scheme: [BlerPoint, ...]}``."""
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["scheme"], []).append(
                BlerPoint(float(row["snr_db"]), int(row["trials"]), int(row["errors"]))
            )
    return out


def tpmi_statistics(cfg, realizations=None, lags=(1, 2, 5, 10, 20)):
    """Signalling load and TPMI agreement across sub-bands for each SB codebook scheme.

    Returns ``{scheme_name: {"codebook_size", "bits_per_subband", "per_realization",
    "lag_agreement"}}``; ``per_realization`` rows are
    ``(index, n_subbands, total_bits, adjacent_agreement)``.
    """
    from .config import Scheme

    schemes = [s for s in cfg.schemes if s.mode is Mode.SB and not s.is_svd]
    if not schemes:
        raise ParameterError("TPMI report needs an SB scheme with a codebook")
    n_real = cfg.n_tbs if realizations is None else int(realizations)
    part = partition(cfg.grid, cfg.sbs_rbs)
    profile = cfg.profile
    out = {s.name: {"per_realization": [], "lag_hits": np.zeros(len(lags)), "lag_pairs": np.zeros(len(lags))}
           for s in schemes}
    for t in range(n_real):
        grid = generate_realization(cfg.grid, profile, cfg.n_rx, cfg.n_tx, cfg.seed, t)
        stats = partition_stats(grid, part)
        for s in schemes:
            cb = Scheme(Mode.SB, s.codebook).build(cfg.n_tx)
            tpmi, _ = evaluate(stats, stats, cb)
            rec = out[s.name]
            rec["codebook_size"] = len(cb)
            rec["bits_per_subband"] = cb.tpmi_bits
            rec["per_realization"].append((t, len(part), len(part) * cb.tpmi_bits, agreement(tpmi, 1)))
            for i, lag in enumerate(lags):
                if lag < len(tpmi):
                    rec["lag_hits"][i] += np.count_nonzero(tpmi[lag:] == tpmi[:-lag])
                    rec["lag_pairs"][i] += len(tpmi) - lag
    for rec in out.values():
        hits, pairs = rec.pop("lag_hits"), rec.pop("lag_pairs")
        rec["lag_agreement"] = {
            lag: (float(h / p) if p else float("nan")) for lag, h, p in zip(lags, hits, pairs)
        }
    return out


def agreement(tpmi, lag=1):
    """Fraction of sub-band pairs ``lag`` apart that carry the same TPMI."""
    tpmi = np.asarray(tpmi)
    if lag >= len(tpmi):
        return float("nan")
    return float(np.mean(tpmi[lag:] == tpmi[:-lag]))


def tpmi_report(cfg, realizations=None):
    stats = tpmi_statistics(cfg, realizations)
    lines = []
    for name, rec in stats.items():
        lines.append(
            f"# scheme {name} codebook_size={rec['codebook_size']} "
            f"bits_per_subband={rec['bits_per_subband']} sbs_rbs={cfg.sbs_rbs}"
        )
        lines.append("realization subbands bits_per_subband total_bits adjacent_agreement")
        for t, n_sb, bits, agr in rec["per_realization"]:
            lines.append(f"{t} {n_sb} {rec['bits_per_subband']} {bits} {agr:.4f}")
        lines.append("lag_subbands agreement")
        for lag, agr in rec["lag_agreement"].items():
            lines.append(f"{lag} {agr:.4f}")
        lines.append("")
    return "\n".join(lines)
