"""Compiled versus pure-Python kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Both backends are imported side by side, checked for agreement and timed
on the inner loops that dominate the observables: the confluent
hypergeometric series of the undriven populations and the Laguerre sum of
the Wigner function.
"""

import argparse
import json
import timeit

import numpy as np

from kerrsync._kernels import _core_py

try:
    from kerrsync._kernels import _core
except ImportError:  # extension not built
    _core = None


def kummer_workload(mod):
    total = 0.0
    for r in np.linspace(0.2, 40.0, 40):
        for n in range(30):
            total += mod.kummer_series(1.0 + n, r + n, r)[0]
    return total


def wigner_workload(mod, rho, xs):
    return mod.wigner_laguerre(rho, xs, xs)


def random_state(dim, seed=3):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def bench(repeat):
    rho = random_state(30)
    xs = np.linspace(-6, 6, 161)
    cases = {
        "kummer_series (1200 calls)": lambda m: kummer_workload(m),
        "wigner_laguerre (N=30, 161x161)": lambda m: wigner_workload(m, rho, xs),
    }
    rows = []
    for label, fn in cases.items():
        row = {"kernel": label}
        ref = fn(_core_py)
        row["python_s"] = min(timeit.repeat(lambda: fn(_core_py), number=1, repeat=repeat))
        if _core is not None:
            got = fn(_core)
            row["max_abs_diff"] = float(np.max(np.abs(np.asarray(got) - np.asarray(ref))))
            row["cython_s"] = min(timeit.repeat(lambda: fn(_core), number=1, repeat=repeat))
            row["speedup"] = row["python_s"] / row["cython_s"]
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = ap.parse_args(argv)
    rows = bench(args.repeat)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if _core is None:
        print("compiled extension not available; timing the fallback only")
    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>9s}")
    for r in rows:
        print(f"{r['kernel']:34s} {r['python_s']:11.4f} {r.get('cython_s', float('nan')):11.4f} "
              f"{r.get('speedup', float('nan')):8.1f} {r.get('max_abs_diff', float('nan')):9.1e}")


if __name__ == "__main__":
    main()
