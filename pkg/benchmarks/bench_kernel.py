"""Compare the compiled slot kernel with its pure-Python twin.

Both backends step identical environments (same seed, same action
sequence); the script checks that their metrics agree bit for bit and
reports per-step wall time.

    python3 benchmarks/bench_kernel.py --steps 20
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ganslice.env import default_env_config, env_from_config


def run(backend: str, steps: int, seed: int, resolution: float):
    env = env_from_config(default_env_config(resolution_hz=resolution, seed=seed), backend=backend)
    _ = env.obs_scale  # warm-up draws are not part of the timing
    rng = np.random.default_rng(seed)
    actions = rng.integers(len(env.actions), size=steps)
    out = []
    t0 = time.perf_counter()
    for a in actions:
        _, m = env.step(int(a))
        out.append((m.se, *m.ssr, m.utility))
    return (time.perf_counter() - t0) / steps, np.array(out)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=float, default=1e6)
    args = p.parse_args(argv)

    results = {}
    for backend in ("cython", "python"):
        try:
            results[backend] = run(backend, args.steps, args.seed, args.resolution)
        except ImportError:
            print(f"{backend:>7}: unavailable (extension not built)")
    for backend, (dt, _) in results.items():
        print(f"{backend:>7}: {dt * 1e3:8.2f} ms/step")
    if len(results) == 2:
        same = np.array_equal(results["cython"][1], results["python"][1])
        speedup = results["python"][0] / results["cython"][0]
        print(f"speedup: {speedup:.1f}x, identical metrics: {same}")
        return 0 if same else 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
