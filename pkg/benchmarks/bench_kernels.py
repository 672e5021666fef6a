"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--points 2000] [--repeat 5]

Times a full-circuit S-parameter sweep and one delta-kappa evaluation
(two pole searches) on each backend. Before timing, it checks that the two
backends give the same sweep result.
"""

import argparse
import time

import numpy as np

from nanores import _kernels as K
from nanores.acsolver import compute_s_parameters
from nanores.netlist import CoupledResonatorParams, build_coupled_nanowire_circuit
from nanores.resonance import delta_kappa


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation on the numba path
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    params = CoupledResonatorParams.from_fractions(x_b=0.185, l_b=0.30)
    graph = build_coupled_nanowire_circuit(params)
    freqs = np.linspace(2e9, 14e9, args.points)

    backends = ["numpy"] + (["numba"] if K.HAVE_NUMBA else [])
    ref = {}
    rows = []
    try:
        for name in backends:
            K.set_backend(name == "numba")
            ref[name] = compute_s_parameters(graph, freqs).s
            t_sweep = best_of(lambda: compute_s_parameters(graph, freqs), args.repeat)
            t_dk = best_of(lambda: delta_kappa(params), args.repeat)
            rows.append((name, t_sweep, t_dk))
    finally:
        K.set_backend(K.HAVE_NUMBA)

    if len(ref) == 2:
        diff = np.abs(ref["numba"] - ref["numpy"]).max()
        print(f"max |S_numba - S_numpy| = {diff:.3e}")
    print(f"{'backend':<8} {'sweep ' + str(args.points) + ' pts [ms]':>22} {'delta_kappa [ms]':>18}")
    for name, ts, td in rows:
        print(f"{name:<8} {ts * 1e3:>22.2f} {td * 1e3:>18.2f}")
    if len(rows) == 2:
        print(f"speed-up  {rows[0][1] / rows[1][1]:>21.2f}x {rows[0][2] / rows[1][2]:>17.2f}x")


if __name__ == "__main__":
    main()
