"""Compare the compiled kernels with the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat R] [--json PATH]``

Each kernel runs on identical inputs under both backends; the table reports
the best of ``R`` wall times and the speed-up of the extension.
"""

import argparse
import json
import sys
import timeit

import numpy as np

from robust_spectra import _pure
from robust_spectra.net import build_delta_net

try:
    from robust_spectra import _kernels
except ImportError:
    _kernels = None


def cases():
    rng = np.random.default_rng(0)
    t = rng.normal(0.0, 2.0, 10 ** 6)
    a = rng.standard_t(3.0, 10 ** 5) ** 2
    lam = 0.4
    sym = rng.standard_normal((12, 12))
    sym = sym + sym.T
    th = build_delta_net(3, 0.3, 0).half()
    l = rng.standard_normal((3, 3))
    e = np.einsum("ij,jk,ik->i", th, l @ l.T, th)
    return {
        "psi (1e6 points)": lambda k: k.psi(t),
        "psi_sum (1e5 points)": lambda k: k.psi_sum(a, 1.0, lam),
        "solve_beta (1e5 points)": lambda k: k.solve_beta(
            a, lam, lam / a.max(), lam / np.quantile(a, 0.25), 1e-10, 500),
        "jacobi_eigh (12 x 12)": lambda k: k.jacobi_eigh(sym, 1e-12, 100),
        f"dykstra (d=3, {len(th)} rows)": lambda k: k.dykstra(
            th, 0.9 * e, 1.1 * e, 1e-10, 20000),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write the results here")
    args = parser.parse_args(argv)
    if _kernels is None:
        sys.stderr.write("compiled kernels are not built; run pip install -e . first\n")
        return 1
    rows = []
    print(f"{'kernel':32s} {'ext [ms]':>10s} {'pure [ms]':>10s} {'speed-up':>9s}")
    for name, fn in cases().items():
        times = {}
        for label, mod in (("ext", _kernels), ("pure", _pure)):
            times[label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        speed = times["pure"] / times["ext"]
        rows.append({"kernel": name, "ext_s": times["ext"], "pure_s": times["pure"],
                     "speedup": speed})
        print(f"{name:32s} {1e3 * times['ext']:10.3f} {1e3 * times['pure']:10.3f} "
              f"{speed:8.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
