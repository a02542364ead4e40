#!/usr/bin/env python3
"""Benchmark the compiled curve kernels against the pure-Python fallback.

Times each scalar kernel over a large batch of pre-generated inputs, plus a
composite "settlement mix" (utilization + deviation + both fee curves per
call), and prints ns/op with the compiled/python speedup.

Usage: python benchmarks/bench_kernels.py [--calls N]
"""

from __future__ import annotations

import argparse
import random
import time

from perpamm import _kernels_py

try:
    from perpamm import _kernels as compiled
except ImportError:
    compiled = None


def make_inputs(n: int, seed: int = 1):
    rng = random.Random(seed)
    return {
        "deviation": [(rng.uniform(0, 100), 0.0004, 0.0) for _ in range(n)],
        "base_fee": [(rng.uniform(0, 100), 0.0325, 0.0) for _ in range(n)],
        "dynamic_fee": [(rng.uniform(0, 100), 500.0, 0.0325) for _ in range(n)],
        "skew": [(rng.uniform(0, 1e9), rng.uniform(0, 1e9), 1e9) for _ in range(n)],
        "utilization": [(rng.uniform(0, 1e9), 1e9) for _ in range(n)],
    }


def time_kernel(module, name: str, inputs) -> float:
    fn = getattr(module, name)
    start = time.perf_counter()
    for args in inputs:
        fn(*args)
    return (time.perf_counter() - start) / len(inputs) * 1e9


def time_settlement_mix(module, inputs) -> float:
    deviation, base_fee = module.deviation, module.base_fee
    dynamic_fee, skew, utilization = module.dynamic_fee, module.skew, module.utilization
    rows = inputs["skew"]
    start = time.perf_counter()
    for long_oi, short_oi, pool in rows:
        u = utilization(long_oi + short_oi, 2 * pool)
        deviation(u, 0.0004, 0.0)
        base_fee(u, 0.0325, 0.0)
        dynamic_fee(skew(long_oi, short_oi, pool), 500.0, 0.0325)
    return (time.perf_counter() - start) / len(rows) * 1e9


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--calls", type=int, default=200_000,
                        help="calls per kernel (default 200000)")
    args = parser.parse_args()

    inputs = make_inputs(args.calls)
    names = ["deviation", "base_fee", "dynamic_fee", "skew", "utilization"]

    print(f"calls per kernel: {args.calls}")
    if compiled is None:
        print("compiled backend: NOT BUILT (pure-Python timings only)")
    header = f"{'kernel':<16}{'python ns/op':>14}{'cython ns/op':>14}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for name in names + ["settlement_mix"]:
        if name == "settlement_mix":
            py = time_settlement_mix(_kernels_py, inputs)
            cy = time_settlement_mix(compiled, inputs) if compiled else None
        else:
            py = time_kernel(_kernels_py, name, inputs[name])
            cy = time_kernel(compiled, name, inputs[name]) if compiled else None
        if cy is None:
            print(f"{name:<16}{py:>14.1f}{'-':>14}{'-':>9}")
        else:
            print(f"{name:<16}{py:>14.1f}{cy:>14.1f}{py / cy:>8.1f}x")

    # parity spot-check: the backends must agree bit-for-bit
    if compiled is not None:
        for name in names:
            for row in inputs[name][:1000]:
                a = getattr(_kernels_py, name)(*row)
                b = getattr(compiled, name)(*row)
                assert a == b, f"backend mismatch in {name} at {row}"
        print("parity check: backends bit-identical on sampled inputs")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
