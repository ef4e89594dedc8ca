"""Time the numba and numpy simulation paths on the shipped models.

    python benchmarks/bench_kernels.py [--trials N] [--steps N] [--repeat N]

Both paths draw from the same counter-based streams, so each run also checks
that they agree to 1e-12 on the recorded states.
"""

import argparse
import time

import numpy as np

from stochrates import _kernels as K
from stochrates.montecarlo import MCConfig, simulate
from stochrates.processes import build_model

MODELS = {
    "counterexample": {},
    "rm:linear": {"steps": "harmonic:1,2", "noise_sd": 1.0, "x0": 1.0},
    "km": {"r": 0.5, "lambda": "const:0.5", "noise_sd": "0.1*geometric:1,0.5", "x0": 1.0},
    "splitting": {"space": "star", "legs": 3, "anchors": [[0, 1.0], [1, 1.0], [2, 1.0]],
                  "weights": [0.8, 0.1, 0.1], "lambda": "harmonic:1,1", "x0": [0, 0.0]},
    "dvoretzky": {"a": "harmonic:1,1", "b": "geometric:1,0.5", "c": "harmonic:1,1",
                  "noise_sd": "geometric:1,0.7071067811865476", "x0": 5.0},
}


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return out, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if not K.HAVE_NUMBA:
        print("numba unavailable (or STOCHRATES_NO_NUMBA set); timing numpy only")
    print(f"trials={args.trials} steps={args.steps} repeat={args.repeat}")
    print(f"{'model':<16}{'numpy s':>10}{'numba s':>10}{'speedup':>9}  agree")
    for name, params in MODELS.items():
        model = build_model(name, params)
        rec = [args.steps // 2, args.steps]
        runs = {}
        for label, flag in (("numpy", False), ("numba", True)):
            if flag and not K.HAVE_NUMBA:
                continue
            cfg = MCConfig(trials=args.trials, horizon=args.steps, use_numba=flag)
            if flag:
                simulate(model, MCConfig(trials=2, horizon=2, use_numba=True), 2, [1])  # compile
            runs[label] = best_of(lambda: simulate(model, cfg, args.steps, rec), args.repeat)
        t_np = runs["numpy"][1]
        if "numba" in runs:
            t_nb = runs["numba"][1]
            same = np.allclose(runs["numpy"][0].states, runs["numba"][0].states,
                               rtol=0, atol=1e-12)
            print(f"{name:<16}{t_np:>10.3f}{t_nb:>10.3f}{t_np / t_nb:>9.1f}  {same}")
        else:
            print(f"{name:<16}{t_np:>10.3f}{'-':>10}{'-':>9}  -")


if __name__ == "__main__":
    main()
