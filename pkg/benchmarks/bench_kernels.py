"""Compare the compiled and pure-NumPy kernels on simulator-sized workloads.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Workloads match one 270-RB trial: 270 dominant eigenpairs of 8x8 sub-band
covariances, and a full search of 270 vectors over the 2^14-entry 8TX
phase-grid codebook (plus the 512-entry 4TX one).
"""
import argparse
import timeit

import numpy as np

from sbprecode import _kernels_py
from sbprecode.codebook import proposed_codebook

try:
    from sbprecode import _kernels
except ImportError:
    _kernels = None


def workloads(rng):
    h = rng.standard_normal((270, 8, 8)) + 1j * rng.standard_normal((270, 8, 8))
    covs = np.conj(np.swapaxes(h, 1, 2)) @ h
    v8 = rng.standard_normal((270, 8)) + 1j * rng.standard_normal((270, 8))
    v8 /= np.linalg.norm(v8, axis=1, keepdims=True)
    v4 = v8[:, :4] / np.linalg.norm(v8[:, :4], axis=1, keepdims=True)
    w8 = proposed_codebook(8, [2] * 7).weights
    w4 = proposed_codebook(4, [3, 3, 3]).weights
    return {
        "eigpairs 270 x 8x8": lambda k: k.dominant_eigpairs(covs, 1e-10, 10_000),
        "search 270 x 16384 (8TX)": lambda k: k.codebook_search(v8, w8, 1e-12),
        "search 270 x 512 (4TX)": lambda k: k.codebook_search(v4, w4, 1e-12),
    }


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    else:
        print("compiled extension not built; timing the NumPy fallback only")

    rng = np.random.default_rng(0)
    print(f"{'workload':<28}" + "".join(f"{name:>12}" for name, _ in backends) + "   speedup")
    for label, run in workloads(rng).items():
        times = [best_of(lambda k=k: run(k), args.repeat) for _, k in backends]
        # warm results must agree across backends before the timings mean anything
        if len(backends) == 2:
            a, b = run(_kernels_py), run(_kernels)
            np.testing.assert_allclose(a[1], b[1], rtol=1e-9, atol=1e-12)
        row = f"{label:<28}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"   {times[0] / times[1]:>6.2f}x"
        print(row)


if __name__ == "__main__":
    main()
