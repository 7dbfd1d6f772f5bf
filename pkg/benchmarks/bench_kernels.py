#!/usr/bin/env python3
"""Time the one-step kernels with and without numba.

Each variant runs in its own interpreter because the switch
``CONTACT_HJ_DISABLE_NUMBA`` is read at import time.  The parent compares
the outputs of both runs and prints a table.

    python benchmarks/bench_kernels.py --n 512 2048 --steps 50
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time

import numpy as np


def child(n_list, steps, out_dir):
    from contact_hj import _accel
    from contact_hj.model import make_grid, toy_model
    from contact_hj.semigroup import BACKWARD, FORWARD, Stepper, default_step_params

    timings = {}
    for n in n_list:
        g = make_grid(n)
        m = toy_model(1.0)
        sp = default_step_params(m, g, 1e-3)
        st = Stepper(m, g, sp)
        f0 = np.sin(g.nodes) + 0.3 * np.cos(3 * g.nodes)
        for direction in (BACKWARD, FORWARD):
            st.step(f0, direction)  # warm-up, includes compilation
        for direction in (BACKWARD, FORWARD):
            vals = f0.copy()
            t0 = time.perf_counter()
            for _ in range(steps):
                vals, _, _ = st.step(vals, direction)
            dt = time.perf_counter() - t0
            timings[f"{n}-{direction}"] = dt / steps
            np.save(os.path.join(out_dir, f"{n}-{direction}.npy"), vals)
    with open(os.path.join(out_dir, "timings.json"), "w") as fh:
        json.dump({"numba": _accel.USE_NUMBA, "per_step": timings}, fh)


def run_variant(disable, args, out_dir):
    env = dict(os.environ)
    env["CONTACT_HJ_DISABLE_NUMBA"] = "1" if disable else ""
    cmd = [sys.executable, __file__, "--child", out_dir, "--steps", str(args.steps), "--n",
           *map(str, args.n)]
    subprocess.run(cmd, env=env, check=True)
    with open(os.path.join(out_dir, "timings.json")) as fh:
        return json.load(fh)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[512, 2048])
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--child", metavar="DIR", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.child:
        child(args.n, args.steps, args.child)
        return 0

    with tempfile.TemporaryDirectory() as fast_dir, tempfile.TemporaryDirectory() as slow_dir:
        fast = run_variant(False, args, fast_dir)
        slow = run_variant(True, args, slow_dir)
        if not fast["numba"] or slow["numba"]:
            print("warning: numba switch did not take effect", file=sys.stderr)
        print(f"{'case':>14} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8} {'max diff':>10}")
        worst = 0.0
        for key in fast["per_step"]:
            a = np.load(os.path.join(fast_dir, f"{key}.npy"))
            b = np.load(os.path.join(slow_dir, f"{key}.npy"))
            diff = float(np.max(np.abs(a - b)))
            worst = max(worst, diff)
            tf, ts = fast["per_step"][key] * 1e3, slow["per_step"][key] * 1e3
            print(f"{key:>14} {tf:10.3f} {ts:10.3f} {ts / tf:8.1f} {diff:10.1e}")
    return 0 if worst <= 1e-12 else 1


if __name__ == "__main__":
    sys.exit(main())
