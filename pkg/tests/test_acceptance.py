"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` to see the summary block at the end.
"""
import time

import numpy as np
import pytest

from sbprecode.channel import GridSpec, default_profile, generate_realization
from sbprecode.cli import main
from sbprecode.codebook import (
    is_superset,
    legacy_codebook,
    proposed_codebook,
    type1_8tx_codebook,
)
from sbprecode.config import Scheme, SimConfig
from sbprecode.harness import gain_db, run_sweep, sbs_study
from sbprecode.numerics import herm_dominant_eigpairs
from sbprecode.precoding import Mode, SubbandStats, assign_all, partition, search_codebook

from conftest import ACCEPTANCE_LINES, random_psd, random_unit

pytestmark = pytest.mark.acceptance

GRID = GridSpec()
PART_1RB = partition(GRID, 1)

PROPOSED = {2: "proposed(3)", 4: "proposed(3,3,3)", 8: "proposed(2)"}

CODEBOOKS = {
    2: [legacy_codebook(2), proposed_codebook(2, [2]), proposed_codebook(2, [3]), proposed_codebook(2, [4])],
    4: [legacy_codebook(4), proposed_codebook(4, [2, 2, 2]), proposed_codebook(4, [3, 3, 3])],
    8: [legacy_codebook(8), type1_8tx_codebook(2, 2), proposed_codebook(8, [2] * 7)],
}


def record(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def realizations(n_tx, count, seed=2024):
    prof = default_profile()
    for t in range(count):
        yield generate_realization(GRID, prof, 8, n_tx, seed=seed, index=t)


def test_criterion_1_svd_dominance():
    started = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = -np.inf
    for n_tx, books in CODEBOOKS.items():
        covs = random_psd(rng, n_tx, 1000)
        _, vs = herm_dominant_eigpairs(covs)
        # the SVD precoder is v itself, so its metric is |v^H v| = 1
        worst = max(worst, float(np.max(np.abs(np.linalg.norm(vs, axis=1) - 1.0))))
        for cb in books:
            for lo in range(0, 1000, 250):
                mags = np.abs(vs[lo : lo + 250].conj() @ cb.weights.T)
                worst = max(worst, float(mags.max()) - 1.0)
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-9 and elapsed < 10
    record(1, "SVD metric 1 dominates every codebook entry", ok,
           f"max(|v^H w|) - 1 = {worst:.2e} over 1000 covariances x n_tx in (2,4,8), {elapsed:.1f} s")
    assert ok


def test_criterion_2_sb_dominates_wb():
    worst_metric, worst_gamma, count = -np.inf, -np.inf, 0
    for n_tx in (2, 4, 8):
        cb = legacy_codebook(n_tx)
        for grid in realizations(n_tx, 200, seed=7):
            sb = assign_all(grid, PART_1RB, cb, Mode.SB, 1.0, 1.0)
            wb = assign_all(grid, PART_1RB, cb, Mode.WB, 1.0, 1.0)
            m_sb = np.array([a.metric for a in sb])
            m_wb = np.array([a.metric for a in wb])
            g_sb = np.array([a.post_snr_linear for a in sb])
            g_wb = np.array([a.post_snr_linear for a in wb])
            worst_metric = max(worst_metric, float(np.max(m_wb - m_sb)))
            worst_gamma = max(worst_gamma, float(np.max((g_wb - g_sb) / np.maximum(g_wb, 1e-300))))
            count += 1
    ok = worst_metric <= 1e-9 and worst_gamma <= 1e-9
    record(2, "per-sub-band SB metric and SNR dominate WB", ok,
           f"{count} realizations, worst metric excess {worst_metric:.2e}, worst relative SNR excess {worst_gamma:.2e}")
    assert ok


def test_criterion_3_superset_dominance():
    big, small = proposed_codebook(2, [3]), legacy_codebook(2)
    superset = is_superset(big, small)
    worst = -np.inf
    for grid in realizations(2, 200, seed=11):
        lo = assign_all(grid, PART_1RB, small, Mode.SB, 1.0, 1.0)
        hi = assign_all(grid, PART_1RB, big, Mode.SB, 1.0, 1.0)
        worst = max(worst, max(a.metric - b.metric for a, b in zip(lo, hi)))
    ok = superset and worst <= 1e-9
    record(3, "superset codebook metric dominance", ok,
           f"is_superset={superset}, worst legacy-over-proposed metric excess {worst:.2e} over 200 realizations")
    assert ok


def test_criterion_4_census():
    started = time.perf_counter()
    cases = [
        (legacy_codebook(2), 4),
        (legacy_codebook(4), 16),
        (type1_8tx_codebook(4, 1), 16),
        (proposed_codebook(4, [3, 3, 3]), 512),
        (proposed_codebook(8, [2] * 7), 2**14),
    ]
    ok = True
    worst = 0.0
    for cb, size in cases:
        w = cb.weights
        ok &= len(cb) == size
        dev = max(
            float(np.max(np.abs(np.linalg.norm(w, axis=1) - 1.0))),
            float(np.max(np.abs(np.abs(w) - 1 / np.sqrt(cb.n_tx)))),
        )
        worst = max(worst, dev)
    elapsed = time.perf_counter() - started
    ok = bool(ok and worst <= 1e-12 and elapsed < 5)
    record(4, "codebook census", ok,
           f"sizes {[len(c) for c, _ in cases]}, worst norm/modulus deviation {worst:.1e}, {elapsed:.2f} s")
    assert ok


def test_criterion_5_quantization_bound():
    started = time.perf_counter()
    rng = np.random.default_rng(5)
    vs = random_unit(rng, 2, 10_000)
    n_sweep = 10_000
    phases = np.exp(2j * np.pi * np.arange(n_sweep) / n_sweep)
    worst_bound, worst_oracle = -np.inf, 0.0
    for m in (2, 3, 4):
        cb = proposed_codebook(2, [m])
        metric2 = np.array([search_codebook(SubbandStats(None, 1.0, v), cb).metric for v in vs]) ** 2
        a, b = np.abs(vs[:, 0]), np.abs(vs[:, 1])
        bound = (a**2 + b**2 + 2 * a * b * np.cos(np.pi / 2**m)) / 2
        worst_bound = max(worst_bound, float(np.max(bound - metric2)))
        step = n_sweep // 2**m
        best = np.empty(len(vs))
        for lo in range(0, len(vs), 500):
            blk = vs[lo : lo + 500]
            sweep = np.abs(np.conj(blk[:, :1]) + np.conj(blk[:, 1:]) * phases[None, :]) ** 2 / 2
            best[lo : lo + 500] = sweep[:, ::step].max(axis=1)
        worst_oracle = max(worst_oracle, float(np.max(np.abs(best - metric2))))
    elapsed = time.perf_counter() - started
    # "exact" up to rounding of two independently computed phasors
    ok = worst_bound <= 1e-12 and worst_oracle <= 1e-12 and elapsed < 30
    record(5, "2TX quantization bound and phase-sweep oracle", ok,
           f"worst bound violation {worst_bound:.1e}, worst oracle mismatch {worst_oracle:.1e}, {elapsed:.1f} s")
    assert ok


SWEEP_SNR = dict(snr_start_db=-10.0, snr_stop_db=16.0, snr_step_db=0.25)


@pytest.fixture(scope="module")
def directional_sweeps():
    out = {}
    started = time.perf_counter()
    for n_tx in (2, 4, 8):
        cfg = SimConfig(
            n_tx=n_tx,
            n_rx=8,
            n_tbs=1500,
            sbs_rbs=1,
            seed=6,
            schemes=tuple(Scheme.parse(s) for s in (
                "WB:legacy", "SB:legacy", f"SB:{PROPOSED[n_tx]}", "SB:svd",
            )),
            **SWEEP_SNR,
        )
        out[n_tx] = run_sweep(cfg)
    return out, time.perf_counter() - started


@pytest.mark.slow
def test_criterion_6_directional(directional_sweeps):
    sweeps, elapsed = directional_sweeps
    g = {n: gain_db(sweeps[n], "SB-legacy", "WB-legacy") for n in (2, 4, 8)}
    g8p = gain_db(sweeps[8], f"SB-{PROPOSED[8]}", "WB-legacy")
    fmt = lambda x: "n/a" if x is None else f"{x:+.2f} dB"  # noqa: E731

    ok_a = g[2] is not None and g[2] > 0
    ok_b = None not in (g[2], g[4]) and g[4] > g[2]
    ok_c = None not in (g8p, g[8]) and g8p > g[8]
    worst = -np.inf
    for n in (2, 4, 8):
        r = sweeps[n]
        order = ["SB-svd", f"SB-{PROPOSED[n]}", "SB-legacy", "WB-legacy"]
        for lo_name, hi_name in zip(order, order[1:]):
            lo, hi = r.bler(lo_name), r.bler(hi_name)
            p = np.clip((lo + hi) / 2, 1 / 1500, 1 - 1 / 1500)
            sigma = np.sqrt(2 * p * (1 - p) / 1500)
            worst = max(worst, float(np.max((lo - hi) / sigma)))
    ok_d = worst <= 3.0
    ok_t = elapsed < 600
    record("6a", "2TX SB-legacy gain over WB-legacy > 0", ok_a, f"gain {fmt(g[2])}")
    record("6b", "4TX SB-legacy gain > 2TX SB-legacy gain", ok_b, f"4TX {fmt(g[4])} vs 2TX {fmt(g[2])}")
    record("6c", "8TX SB-proposed gain > 8TX SB-legacy gain", ok_c, f"proposed {fmt(g8p)} vs legacy {fmt(g[8])}")
    record("6d", "BLER ordering SVD <= proposed <= SB-legacy <= WB-legacy", ok_d,
           f"worst ordering violation {worst:+.2f} sigma (limit 3)")
    record("6t", "directional sweeps runtime < 10 min", ok_t, f"{elapsed:.0f} s for 3 x 1500 TBs")
    assert ok_a and ok_b and ok_c and ok_d and ok_t


@pytest.mark.slow
def test_criterion_7_sbs_study():
    started = time.perf_counter()
    sizes = (1, 2, 5, 10, 30, 90, 270)
    cfg = SimConfig(
        n_tx=2, n_rx=8, n_tbs=200, seed=8, schemes=(Scheme.parse("SB:legacy"),),
        snr_start_db=0.0, snr_stop_db=0.0,
    )
    mm = sbs_study(cfg, sizes).metadata["mean_metric"]
    vals = np.array([mm[f"SB-legacy@sbs={s}"] for s in sizes])
    elapsed = time.perf_counter() - started
    monotone = bool(np.all(np.diff(vals) <= 1e-12))
    ratio = (vals[0] - vals[3]) / (vals[0] - vals[-1])
    ok_m = monotone
    ok_r = ratio < 0.2
    ok_t = elapsed < 120
    record("7a", "mean metric non-increasing in SBS", ok_m, "metrics " + ", ".join(f"{v:.4f}" for v in vals))
    record("7b", "gap(1,10) < 20% of gap(1,270)", ok_r, f"ratio {ratio:.3f}")
    record("7t", "SBS study runtime < 2 min", ok_t, f"{elapsed:.1f} s")
    assert ok_m and ok_r and ok_t


def test_criterion_8_reproducibility(tmp_path):
    cfg = tmp_path / "repro.cfg"
    cfg.write_text(
        "n_tx = 4\nn_tbs = 48\nschemes = WB:legacy, SB:legacy, SB:proposed(3,3,3)\n"
        "snr.start_db = 0\nsnr.stop_db = 12\nsnr.step_db = 0.5\nseed = 99\n"
    )
    outs = {}
    for tag, workers in (("a", 1), ("b", 1), ("w8", 8)):
        path = tmp_path / f"{tag}.csv"
        assert main(["run", "--config", str(cfg), "--workers", str(workers), "--out", str(path)]) == 0
        outs[tag] = path.read_bytes()
    same_seed = outs["a"] == outs["b"]
    same_workers = outs["a"] == outs["w8"]
    ok = same_seed and same_workers
    record(8, "byte-identical CSV across runs and worker counts", ok,
           f"repeat identical={same_seed}, workers 1 vs 8 identical={same_workers}")
    assert ok
