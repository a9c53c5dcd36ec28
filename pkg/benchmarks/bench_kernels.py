"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from simplexquant._backend import compiled_kernels, python_kernels


def cases(rng):
    k, m = 5, 200
    X = rng.dirichlet(np.ones(m), size=k).T
    y = X @ rng.dirichlet(np.ones(k))
    w = np.ones(m)
    D = X.T @ X
    d = X.T @ y
    lip = float(np.linalg.eigvalsh(D).max()) * 1.01
    x0 = np.full(k, 1.0 / k)
    v = rng.normal(size=50)
    return {
        "project_simplex (n=50)": lambda kern: kern.project_simplex(v),
        "ls_apg (K=5)": lambda kern: kern.ls_apg(D / lip, d / lip, x0, 1.0, 1e-10, 10000),
        "hellinger_pgd (K=5, m=200)": lambda kern: kern.hellinger_pgd(X, y, w, x0, 1e-12, 1e-10, 10000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    backends = {"python": python_kernels}
    if compiled_kernels is not None:
        backends["cython"] = compiled_kernels
    else:
        print("compiled kernels not built; timing the python backend only")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<30}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, fn in cases(rng).items():
        times = {}
        for name, kern in backends.items():
            fn(kern)  # warm up
            times[name] = min(timeit.repeat(lambda: fn(kern), number=args.repeat, repeat=3)) / args.repeat
        row = f"{label:<30}" + "".join(f"{t * 1e6:>12.1f}us" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
