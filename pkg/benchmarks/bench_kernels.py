"""Compare the numba and numpy paths of the element kernels.

Kernel timings call ``*_nb`` and ``*_np`` directly on data from uniform meshes.
With ``--end-to-end`` one KKT sweep is also timed in two subprocesses, with
OPTCERT_NUMBA=1 and OPTCERT_NUMBA=0 (the flag is read at import time).

    python3 benchmarks/bench_kernels.py --n 32 64 128
    python3 benchmarks/bench_kernels.py --end-to-end
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from optcert import kernels
from optcert._accel import HAS_NUMBA
from optcert.mesh import build_uniform
from optcert.quadrature import dunavant8

E2E_SNIPPET = """
import time
from optcert._accel import backend_name
from optcert.experiments import ScenarioSpec, run_scenario
scen = ScenarioSpec(example="cubic", case="control", desired="a1", n={n})
run_scenario(ScenarioSpec(case="control", n=4, alphas=(1.0,)))  # compile / warm up
t0 = time.perf_counter()
rows = run_scenario(scen)
print(backend_name(), time.perf_counter() - t0, sum(r.iterations for r in rows))
"""


def best_of(fn, repeat):
    fn()  # first call compiles under numba
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(n, rng):
    mesh = build_uniform(n)
    rule = dunavant8()
    T = mesh.num_triangles
    coef = rng.normal(size=(T, len(rule.weights)))
    # a clamp argument with level lines crossing many triangles
    x = mesh.nodes
    g = (8 * np.sin(2 * np.pi * x[:, 0]) * np.sin(2 * np.pi * x[:, 1]))[mesh.triangles]
    g = np.ascontiguousarray(g)
    a = mesh.areas
    return {
        "weighted_vector": lambda impl: getattr(kernels, f"weighted_vector_{impl}")(coef, rule.points, rule.weights, a),
        "weighted_matrix": lambda impl: getattr(kernels, f"weighted_matrix_{impl}")(coef, rule.points, rule.weights, a),
        "clamp_integrals": lambda impl: getattr(kernels, f"clamp_integrals_{impl}")(g, -5.0, 5.0, a),
        "abs_power_q5": lambda impl: getattr(kernels, f"abs_power_integrals_{impl}")(g, 5, a),
    }, T


def run_kernels(ns, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'n':>6}{'triangles':>11}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>9}")
    for n in ns:
        cases, T = kernel_cases(n, rng)
        for name, fn in cases.items():
            t_np = best_of(lambda: fn("np"), repeat)
            t_nb = best_of(lambda: fn("nb"), repeat)
            print(f"{name:<18}{n:>6}{T:>11}{t_np * 1e3:>13.3f}{t_nb * 1e3:>13.3f}{t_np / t_nb:>9.1f}")


def run_end_to_end(n):
    print(f"\nend-to-end: cubic / control-constrained / A1 sweep, 10 alphas, n = {n}")
    for flag in ("1", "0"):
        env = dict(os.environ, OPTCERT_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E_SNIPPET.format(n=n)], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  OPTCERT_NUMBA={flag}: backend {out[0]:<6} {float(out[1]):7.2f} s  ({out[2]} Newton steps)")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--n", type=int, nargs="+", default=[32, 64, 128])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--end-to-end", action="store_true")
    p.add_argument("--e2e-n", type=int, default=32)
    args = p.parse_args(argv)
    if not HAS_NUMBA:
        print("numba is not installed: the *_nb kernels run as plain Python loops")
    run_kernels(args.n, args.repeat)
    if args.end_to_end:
        run_end_to_end(args.e2e_n)


if __name__ == "__main__":
    main()
