"""Compare the compiled and numpy sweep kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]

Times the allocation kernel and the occupancy counts on synthetic inputs of
growing size, then a complete Mix1 sweep with each backend.
"""
import argparse
import timeit

import numpy as np

from betaddp import _pykernels
from betaddp.gaussian import GaussianModel, generate_mix_data, wi_si_presets
from betaddp.gibbs import SeriesData, SliceGibbsSampler
from betaddp.prior import StickConstruction

try:
    from betaddp import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def synthetic(n, K, rng):
    series = np.repeat(np.arange(2), n // 2).astype(np.int64)
    w = rng.dirichlet(np.ones(K), size=2)
    cumw = np.ascontiguousarray(np.cumsum(w, axis=1))
    d = rng.integers(0, K, size=series.size)
    u = w[series, d] * rng.random(series.size)
    return dict(
        y=rng.normal(size=series.size), series=series, u=u, w=np.ascontiguousarray(w), cumw=cumw,
        mu=rng.normal(size=K), lognorm=np.zeros(K), prec=np.ones(K), draws=rng.random(series.size),
        d=d.astype(np.int64) + 1,
    )


def time_alloc(mod, a, repeat):
    n = a["y"].size
    K = a["mu"].size
    out, ns, work = np.empty(n, np.int64), np.empty(n, np.int64), np.empty(K)
    call = lambda: mod.allocate_gaussian(a["y"], a["series"], a["u"], a["w"], a["cumw"], a["mu"],
                                         a["lognorm"], a["prec"], a["draws"], out, ns, work)
    number = max(1, 20000 // (n * K // 100 + 1))
    return min(timeit.repeat(call, number=number, repeat=repeat)) / number


def time_occ(mod, a, repeat):
    K = a["mu"].size
    A, B = np.empty((2, K), np.int64), np.empty((2, K), np.int64)
    call = lambda: mod.occupancy(a["d"], a["series"], A, B)
    return min(timeit.repeat(call, number=200, repeat=repeat)) / 200


def time_sweeps(mod, repeat, sweeps=200):
    import betaddp.gibbs as gibbs

    rng = np.random.default_rng(1)
    y1, y2 = generate_mix_data("Mix1", 50, rng)
    saved = gibbs.kernels.allocate_gaussian, gibbs.kernels.occupancy
    gibbs.kernels.allocate_gaussian, gibbs.kernels.occupancy = mod.allocate_gaussian, mod.occupancy
    try:
        best = np.inf
        for _ in range(repeat):
            s = SliceGibbsSampler(StickConstruction("H1", 2, (1, 1)), GaussianModel(wi_si_presets()["WI"]),
                                  SeriesData.from_series(y1, y2))
            r = np.random.default_rng(2)
            state = s.initial_state(r)
            t = timeit.default_timer()
            for _ in range(sweeps):
                state = s.sweep(state, r)
            best = min(best, (timeit.default_timer() - t) / sweeps)
    finally:
        gibbs.kernels.allocate_gaussian, gibbs.kernels.occupancy = saved
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled extension not available; timing the numpy kernels only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<12}{'n':>7}{'K':>6}" + "".join(f"{name + ' us':>14}" for name, _ in backends) + f"{'speedup':>10}")
    for n, K in [(100, 10), (100, 50), (1000, 20), (10000, 20), (10000, 100)]:
        a = synthetic(n, K, rng)
        for label, fn in (("allocate", time_alloc), ("occupancy", time_occ)):
            ts = [fn(mod, a, args.repeat) * 1e6 for _, mod in backends]
            speed = f"{ts[0] / ts[1]:>9.1f}x" if len(ts) == 2 else ""
            print(f"{label:<12}{n:>7}{K:>6}" + "".join(f"{t:>14.1f}" for t in ts) + speed)
    ts = [time_sweeps(mod, max(1, args.repeat // 2)) * 1e3 for _, mod in backends]
    speed = f"{ts[0] / ts[1]:>9.2f}x" if len(ts) == 2 else ""
    print(f"{'Mix1 sweep':<25}" + "".join(f"{t:>11.3f} ms" for t in ts) + speed)


if __name__ == "__main__":
    main()
