"""Time the hot kernels under numba and under the pure-numpy fallback.

Each path runs in its own interpreter (the switch is read at import):

    python benchmarks/bench_kernels.py            # both paths, side by side
    python benchmarks/bench_kernels.py --worker   # current path only, JSON out
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def worker(repeat):
    from magstark._jit import USE_NUMBA
    from magstark.assembly import apply_operator, assemble_operator, make_grid
    from magstark.classical import trapped_volume_monte_carlo
    from magstark.eig import BandedLU, count_below, dense_eigs
    from magstark.kernels.flow import integrate_batch
    from magstark.potential import EnvelopedQuadraticWell, HamiltonianParams, PotentialSpec
    from magstark.regions import Disc

    spec = PotentialSpec((EnvelopedQuadraticWell(L=3.0),))
    hp = HamiltonianParams(0.1, 1.0)
    P = assemble_operator("P", make_grid((-3, 3, -3, 3), 119, 119), hp, spec)
    x = np.random.default_rng(0).standard_normal(P.N) + 0j
    lu = BandedLU(P, -0.3 + 0.01j)
    S0 = np.random.default_rng(1).uniform(-0.5, 0.5, (200, 4))
    small = assemble_operator("P", make_grid((-3, 3, -3, 3), 14, 14), hp, spec)
    box = ((-2, 2), (-2, 2), (-4, 4), (-2, 2))

    cases = {
        "csr_matvec (N=14161)": lambda: apply_operator(P, x),
        "banded_lu (N=14161)": lambda: BandedLU(P, -0.3 + 0.01j),
        "banded_solve (N=14161)": lambda: lu.solve(x),
        "ldlh_inertia (N=14161)": lambda: count_below(P, 0.2),
        "flow_batch (200 states)": lambda: integrate_batch(spec.as_array(), 1.0, S0, 20.0,
                                                           1e-9, 10.0, np.inf),
        "mc_count (262144 samples)": lambda: trapped_volume_monte_carlo(
            spec, -1.0, 0.2, box, 1 << 18, 3, region=Disc(0, 0, 1.5)),
        "dense_eigs (N=196)": lambda: dense_eigs(small),
    }
    out = {"numba": USE_NUMBA, "times": {k: best_of(f, repeat) for k, f in cases.items()}}
    print(json.dumps(out))


def run_path(pure, repeat):
    env = dict(os.environ, MAGSTARK_PURE_NUMPY="1" if pure else "0")
    r = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(repeat)],
                       env=env, capture_output=True, text=True, check=True)
    return json.loads(r.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--worker", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    nb = run_path(False, args.repeat)
    np_ = run_path(True, args.repeat)
    if not nb["numba"]:
        print("numba is not available; both columns use numpy")
    print(f"{'kernel':28s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speed-up':>9s}")
    for k in nb["times"]:
        a, b = nb["times"][k], np_["times"][k]
        print(f"{k:28s} {a:10.4f} {b:10.4f} {b / a:8.1f}x")


if __name__ == "__main__":
    main()
