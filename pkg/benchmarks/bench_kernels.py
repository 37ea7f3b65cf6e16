"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Both backends run in this process; the ``use_numba`` argument of each kernel
picks the path, so FDPPR_DISABLE_NUMBA does not need to be set.  The first
numba call (compilation) is excluded from the timings.
"""
import argparse
import json
import timeit

import numpy as np

from fdppr import kernels, wave
from fdppr.media import PiecewiseConstant, cell_values, edge_coefficients


def cases():
    rng = np.random.default_rng(0)
    for shape in ((513, 513), (129, 129, 129)):
        u = rng.normal(size=shape)
        out = np.empty_like(u)
        n = shape[0] - 1
        yield f"laplacian2 {shape}", lambda nb, u=u, out=out, n=n: kernels.laplacian2(u, out, n * n, use_numba=nb)
        yield f"laplacian4 {shape}", lambda nb, u=u, out=out, n=n: kernels.laplacian4(u, out, n * n, use_numba=nb)
    n = 512
    mu = PiecewiseConstant(lambda x, y: np.where(x <= 0.5, 1.0, 0.5), {0: [0.5]}, 1.0)
    faces = edge_coefficients(cell_values(mu, 2, n))
    u = rng.normal(size=(n + 1, n + 1))
    out = np.empty_like(u)
    yield "flux_laplacian2 (513, 513)", lambda nb: kernels.flux_laplacian2(u, faces, out, n * n, use_numba=nb)
    p, c, lu = (rng.normal(size=(129, 129, 129)) for _ in range(3))
    dst = np.empty_like(c)
    yield "leapfrog (129, 129, 129)", lambda nb: kernels.leapfrog(p, c, lu, None, 0.25, 0.0, dst, use_numba=nb)


def full_run(use_numba):
    pulse = lambda x, y, z: np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2 + (z - 0.5) ** 2) / 0.01)
    prob = wave.WaveProblem(3, pulse)
    saved = kernels.USE_NUMBA
    kernels.USE_NUMBA = use_numba
    try:
        return wave.run_wave(prob, wave.WaveRunConfig(48, 96, 4, window=1)).levels[-1]
    finally:
        kernels.USE_NUMBA = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json")
    args = ap.parse_args()
    results = []
    print(f"{'case':34s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for name, fn in cases():
        fn(True)
        t_np = min(timeit.repeat(lambda: fn(False), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: fn(True), number=1, repeat=args.repeat)) * 1e3
        results.append({"case": name, "numpy_ms": t_np, "numba_ms": t_nb})
        print(f"{name:34s} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:8.2f}")
    full_run(True)
    t_np = min(timeit.repeat(lambda: full_run(False), number=1, repeat=1)) * 1e3
    t_nb = min(timeit.repeat(lambda: full_run(True), number=1, repeat=1)) * 1e3
    results.append({"case": "3D order-4 run 48^3 x 96", "numpy_ms": t_np, "numba_ms": t_nb})
    print(f"{'3D order-4 run 48^3 x 96':34s} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:8.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
