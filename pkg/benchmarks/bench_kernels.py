"""Time the numba kernels against their pure-numpy counterparts.

    python benchmarks/bench_kernels.py [--repeat 200] [--batch 32] [--dim 256]

Both variants are imported directly, so the ARSM_DISABLE_NUMBA flag does not
matter here. Each kernel is warmed up once (JIT compile) before timing.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from arsm import kernels
from arsm._accel import HAS_NUMBA


def cases(batch: int, dim: int, classes: int, store: int, rng: np.random.Generator):
    X = rng.normal(size=(batch, dim))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    Xadv = X + 0.01 * rng.normal(size=X.shape)
    y = rng.integers(classes, size=batch)
    t = (rng.random(batch) < 0.4).astype(float)
    U = rng.random((batch, classes))
    W = 0.1 * rng.normal(size=(classes, dim))
    b = 0.1 * rng.normal(size=classes)
    wr = 0.1 * rng.normal(size=dim)
    weights = np.array([0.3, 0.3, 0.2, 0.2])
    E = rng.normal(size=(store, dim))
    E /= np.linalg.norm(E, axis=1, keepdims=True)
    match = rng.random(store)
    V = E[:10].copy()
    return {
        "batch_objective": ((X, Xadv, y, t, U, W, b, wr, -2.0, weights),),
        "input_grad": ((X, y, W, b),),
        "pairwise_mean_sim": ((V,),),
        "modified_sim_scan": ((X[0].copy(), E, match, 0.2),),
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--batch", type=int, default=32)
    ap.add_argument("--dim", type=int, default=256)
    ap.add_argument("--classes", type=int, default=14)
    ap.add_argument("--store", type=int, default=500)
    args = ap.parse_args()
    if not HAS_NUMBA:
        raise SystemExit("numba is not installed")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<20} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name, (call_args,) in cases(args.batch, args.dim, args.classes, args.store, rng).items():
        fn_np = getattr(kernels, f"{name}_numpy")
        fn_nb = getattr(kernels, f"{name}_numba")
        fn_nb(*call_args)
        t_np = min(timeit.repeat(lambda: fn_np(*call_args), number=args.repeat, repeat=3)) / args.repeat
        t_nb = min(timeit.repeat(lambda: fn_nb(*call_args), number=args.repeat, repeat=3)) / args.repeat
        print(f"{name:<20} {1e6 * t_np:>10.1f} {1e6 * t_nb:>10.1f} {t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
