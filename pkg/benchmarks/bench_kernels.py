"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times candidate scoring at several list sizes, a full SFS run (285 features,
d = 15) and a small sensitivity sweep, once per backend.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_rows(repeat):
    from expertsel.kernels import get_backend

    rng = np.random.default_rng(0)
    backends = {}
    for name in ("python", "cython"):
        try:
            backends[name] = get_backend(name)
        except ImportError:
            print(f"# backend {name} unavailable", file=sys.stderr)
    print("cells\tcandidates\t" + "\t".join(f"{n}_ms" for n in backends) + "\tspeedup")
    for depth in (6, 10, 14, 17):
        a = rng.uniform(size=1 << depth) / (1 << depth)
        b = rng.uniform(size=1 << depth) / (1 << depth)
        c = rng.uniform(size=285)
        d = rng.uniform(size=285)
        ms = {n: 1e3 * best_of(lambda k=k: k.score_candidates(a, b, c, d), repeat)
              for n, k in backends.items()}
        speed = ms["python"] / ms["cython"] if len(ms) == 2 else float("nan")
        print(f"{1 << depth}\t285\t" + "\t".join(f"{v:.2f}" for v in ms.values())
              + f"\t{speed:.1f}x")


END_TO_END = """
import time
from expertsel import BACKEND, ClassPriors, PerturbationConfig, StoppingRule, run_sensitivity, sfs_select
from expertsel.synthetic import random_table, separated_table
t = random_table(285, seed=3)
t0 = time.perf_counter(); sfs_select(t, ClassPriors(), StoppingRule(target_count=15))
t1 = time.perf_counter()
run_sensitivity(separated_table(), ClassPriors(), PerturbationConfig(sigma=0.2, runs=300, d=10))
t2 = time.perf_counter()
print(f"{BACKEND}\\t{1e3 * (t1 - t0):.1f}\\t{1e3 * (t2 - t1):.1f}")
"""


def end_to_end():
    print("backend\tsfs_285_d15_ms\tsensitivity_300runs_ms")
    for pure in ("1", "0"):
        env = dict(os.environ, EXPERTSEL_PURE=pure)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                             capture_output=True, text=True, check=True)
        print(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    kernel_rows(args.repeat)
    print()
    end_to_end()


if __name__ == "__main__":
    main()
