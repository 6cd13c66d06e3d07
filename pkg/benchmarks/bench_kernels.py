"""Time the hot kernels with numba enabled and with the numpy fallback.

    python3 benchmarks/bench_kernels.py            # both paths, side by side
    python3 benchmarks/bench_kernels.py --single   # current process only (JSON)

The fallback path is measured in a child process started with
RBGD_DISABLE_NUMBA=1, since the flag is read at import time.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np


def measure(repeat=5):
    from rbgd import _kernels
    from rbgd.numerics import Tridiagonal, make_rng
    from rbgd.problems import NepvProblem
    from rbgd.manifolds import Stiefel

    rng = make_rng(0)
    out = {"numba": _kernels.HAS_NUMBA}
    cases = {}
    for m, p in ((500, 50), (5000, 10)):
        L = Tridiagonal.laplacian(m)
        b = rng.standard_normal(m)
        X = rng.standard_normal((m, p))
        P = NepvProblem(m, p)
        Xs = Stiefel(m, p).random_point(rng).value
        cases[f"thomas m={m}"] = lambda L=L, b=b: L.solve(b)
        cases[f"tridiag_matmul {m}x{p}"] = lambda L=L, X=X: L.matmul(X)
        cases[f"row_sq_norms {m}x{p}"] = lambda X=X: _kernels.row_sq_norms(X)
        cases[f"nepv value_and_grad {m}x{p}"] = lambda P=P, X=Xs: P.value_and_grad(X)
    ab = rng.uniform(0, 10, size=(256, 2))
    ab[:, 1] += 1.0
    cases["cubic_root x256"] = lambda: [_kernels.cubic_root(a, b, 1e-14) for a, b in ab]
    for name, fn in cases.items():
        fn()  # warm-up, includes jit compilation
        number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
        best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
        out[name] = best
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--single", action="store_true")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if args.single:
        print(json.dumps(measure(args.repeat)))
        return
    runs = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, RBGD_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, __file__, "--single", "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        runs[label] = json.loads(res.stdout.strip().splitlines()[-1])
    if not runs["numba"].pop("numba"):
        print("note: numba unavailable, both columns use the fallback")
    runs["numpy"].pop("numba")
    print(f"{'kernel':<32}{'numba (us)':>12}{'numpy (us)':>12}{'speedup':>9}")
    for name in runs["numba"]:
        a, b = runs["numba"][name], runs["numpy"][name]
        print(f"{name:<32}{a * 1e6:>12.2f}{b * 1e6:>12.2f}{b / a:>9.2f}")


if __name__ == "__main__":
    main()
