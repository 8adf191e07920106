"""Timing comparison of the pure-Python and compiled sampling kernels.

Runs the same seeded workloads through both backends (confirming the
outputs agree bit for bit) and reports per-call timings:

    python3 benchmarks/compare_backends.py [--horizon 20000] [--repeats 20]
"""

import argparse
import time

import numpy as np

from driftmdp import _kernels_py as pure
from driftmdp.adversary import AdversaryScript
from driftmdp.core import ProblemShape, enumerate_deterministic_policies
from driftmdp.harness import simulation_tables

try:
    from driftmdp import _kernels as compiled
except ImportError:
    compiled = None


def time_calls(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=20_000)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    shape = ProblemShape(4, 2)
    script = AdversaryScript(
        kind="random-smoothed", shape=shape, horizon=args.horizon, seed=3
    )
    policies = enumerate_deterministic_policies(shape)
    tables = simulation_tables(policies, script, args.horizon, 0, lazy=True)

    workloads = {
        "sd_chain": lambda mod, seed: mod.sd_chain(
            tables.log_weights, tables.qcdf, np.random.default_rng(seed)
        ),
        "simulate_game": lambda mod, seed: mod.simulate_game(
            tables.log_weights,
            tables.qcdf,
            tables.action_cdf,
            tables.kernel_cdf,
            tables.loss_table,
            tables.x0,
            np.random.default_rng(seed),
            True,
        ),
    }

    print(f"horizon={args.horizon} policies={len(policies)} repeats={args.repeats}")
    print(f"{'kernel':<16}{'pure (ms)':>12}{'compiled (ms)':>15}{'speedup':>10}")
    for name, call in workloads.items():
        pure_out = call(pure, 7)
        pure_ms = time_calls(lambda: call(pure, 7), args.repeats) * 1e3
        if compiled is None:
            print(f"{name:<16}{pure_ms:>12.2f}{'n/a':>15}{'n/a':>10}")
            continue
        compiled_out = call(compiled, 7)
        for left, right in zip(pure_out, compiled_out):
            assert np.array_equal(left, right), f"{name}: backend outputs differ"
        compiled_ms = time_calls(lambda: call(compiled, 7), args.repeats) * 1e3
        print(
            f"{name:<16}{pure_ms:>12.2f}{compiled_ms:>15.3f}"
            f"{pure_ms / compiled_ms:>9.1f}x"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
