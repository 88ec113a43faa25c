"""Compare the numba kernels with their numpy fallbacks.

Part 1 times each kernel pair in-process on arrays sized like an n=64
cylinder or n=32 cubed-sphere assembly. Part 2 times one full operator
assembly in two subprocesses, with and without ``VECTRANS_DISABLE_NUMBA=1``,
so the package-level switch is exercised end to end.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5] [--csv out.csv]
"""

import argparse
import csv
import json
import os
import subprocess
import sys
import time

import numpy as np
import scipy.sparse as sp

from vectrans import kernels


def _best(fn, repeat):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng):
    nc, nb, nq = 4096, 12, 16
    nf = 2 * nc
    a = rng.standard_normal((nc, nb, nq, 3))
    b = rng.standard_normal((nc, nb, nq, 3))
    w = rng.random((nc, nq))
    g = rng.standard_normal((nc, nb, nq, 3, 3))
    vq = rng.standard_normal((nc, nq, 3))
    pp = rng.standard_normal((nf, nb, 4, 3))
    pm = rng.standard_normal((nf, nb, 4, 3))
    un = rng.standard_normal((nf, 4))
    n_p = rng.standard_normal((nf, 4, 3))
    n_m = -n_p
    wf = rng.random((nf, 4))
    rows = np.repeat(np.arange(50000), 10)
    A = sp.csr_matrix((rng.standard_normal(rows.size), (rows, rng.integers(0, 50000, rows.size))),
                      shape=(50000, 50000))
    x = rng.standard_normal(50000)
    idx = rng.integers(0, 50000, 2_000_000)
    vals = rng.standard_normal(2_000_000)
    return {
        "weighted_dot_blocks": (a, b, w),
        "upwind_facet_blocks": (pp, pm, un, n_p, n_m, wf, True),
        "grad_dot": (g, vq, False),
        "dot_last": (a, vq),
        "csr_matvec": (A.indptr, A.indices, A.data, x),
        "scatter_add": (idx, vals, 50000),
    }


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for name, args in kernel_cases(rng).items():
        f_nb = getattr(kernels, name + "_nb")
        f_np = getattr(kernels, name + "_np")
        diff = np.abs(np.asarray(f_nb(*args)) - np.asarray(f_np(*args))).max()
        t_nb = _best(lambda: f_nb(*args), repeat)
        t_np = _best(lambda: f_np(*args), repeat)
        rows.append({"case": name, "numba_s": t_nb, "numpy_s": t_np, "speedup": t_np / t_nb,
                     "max_abs_diff": float(diff)})
    return rows


_ASSEMBLY = """
import json, time, numpy as np
from vectrans import _accel
from vectrans.mesh import build_cubed_sphere_mesh
from vectrans.spaces import Field, FunctionSpace
from vectrans.transport import upwind_matrix
V = FunctionSpace(build_cubed_sphere_mesh(32, 1.0), "RTf2")
v = Field(V, np.random.default_rng(0).standard_normal(V.dim))
upwind_matrix(V, v)
best = min((lambda t0: (upwind_matrix(V, v), time.perf_counter() - t0)[1])(time.perf_counter())
           for _ in range({repeat}))
print(json.dumps({{"numba": _accel.USE_NUMBA, "seconds": best}}))
"""


def bench_assembly(repeat):
    out = {}
    for disable in ("0", "1"):
        env = dict(os.environ, VECTRANS_DISABLE_NUMBA=disable)
        res = subprocess.run([sys.executable, "-c", _ASSEMBLY.format(repeat=repeat)], env=env,
                             capture_output=True, text=True, check=True)
        info = json.loads(res.stdout.strip().splitlines()[-1])
        out["numba" if info["numba"] else "numpy"] = info["seconds"]
    return {"case": "upwind_matrix RTf2 sphere n=32", "numba_s": out["numba"], "numpy_s": out["numpy"],
            "speedup": out["numpy"] / out["numba"], "max_abs_diff": float("nan")}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--csv", help="also write the table to this CSV file")
    args = p.parse_args(argv)
    rows = bench_kernels(args.repeat) + [bench_assembly(args.repeat)]
    print(f"{'case':34s} {'numba [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for r in rows:
        print(f"{r['case']:34s} {r['numba_s']:11.4f} {r['numpy_s']:11.4f} {r['speedup']:8.2f} "
              f"{r['max_abs_diff']:10.2e}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            wr = csv.DictWriter(fh, fieldnames=list(rows[0]))
            wr.writeheader()
            for r in rows:
                wr.writerow({k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in r.items()})


if __name__ == "__main__":
    main()
