#!/usr/bin/env python3
"""Time the compiled kernels against the pure-Python fallback.

Same entry point as ``stomp bench``:

    python benchmarks/bench_backends.py [--steps N]
"""

import argparse

from stomp.bench import run_bench

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--steps", type=int, default=20000,
                        help="learning steps per timed loop")
    args = parser.parse_args()
    run_bench(steps=args.steps)
