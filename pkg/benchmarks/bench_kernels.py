"""Time the hot kernels on the numba route against the pure-numpy route.

Each route runs in its own interpreter (the route is fixed at import time by
``OPTDESIGN_NO_JIT``).  Usage::

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from optdesign import _jit, kernels
from optdesign.criteria import moments_cholesky
from optdesign.exchange import cexch_element, exch_row
from optdesign.model import ModelSpec
from optdesign.swarm import PsoSettings, pso_search

repeat = int(sys.argv[1])
spec = ModelSpec(3, 12)
wchol = moments_cholesky(spec)
X = np.random.default_rng(0).uniform(-1, 1, (spec.n, spec.k))

def best_of(fn, reps):
    fn()  # warm-up (includes compilation on the numba route)
    times = []
    for _ in range(reps):
        t = time.perf_counter(); fn(); times.append(time.perf_counter() - t)
    return min(times)

cases = {
    "score_design x1000 (k=3 n=12, I)":
        lambda: [kernels.score_design(X, 1, wchol) for _ in range(1000)],
    "cexch_element (k=2 n=8, D)": lambda: cexch_element(ModelSpec(2, 8), "D", rng_seed=1),
    "exch_row (k=2 n=8, I)": lambda: exch_row(ModelSpec(2, 8), "I", rng_seed=1),
    "pso 10x100 (k=2 n=8, D)":
        lambda: pso_search(ModelSpec(2, 8), "D", PsoSettings(swarm_size=10, iterations=100), rng_seed=1),
}
json.dump({"backend": _jit.BACKEND,
           "times": {k: best_of(f, repeat) for k, f in cases.items()}}, sys.stdout)
"""


def run(no_jit: bool, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("OPTDESIGN_NO_JIT", None)
    if no_jit:
        env["OPTDESIGN_NO_JIT"] = "1"
    out = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    print(f"{'case':<36} {'numba s':>10} {'numpy s':>10} {'speedup':>9}")
    for case, t_fast in fast["times"].items():
        t_slow = slow["times"][case]
        print(f"{case:<36} {t_fast:>10.4f} {t_slow:>10.4f} {t_slow / t_fast:>8.1f}x")


if __name__ == "__main__":
    main()
