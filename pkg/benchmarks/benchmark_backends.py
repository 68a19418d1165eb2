#!/usr/bin/env python3
"""Timing comparison of the compiled kernels against the NumPy reference.

Exercises the two hot paths at production-like shapes: the batched
tridiagonal solve behind every implicit substep and the polynomial
resolvent behind every reaction substep. Both backends must agree to
the bit on identical inputs (the solve order and the Newton update are
the same); the script reports the max deviation alongside timings.
"""

import argparse
import time

import numpy as np

from bsac import backends


def best_time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--modes", type=int, default=513,
                        help="number of independent tridiagonal systems")
    parser.add_argument("--ny", type=int, default=256,
                        help="size of each tridiagonal system")
    parser.add_argument("--points", type=int, default=500_000,
                        help="resolvent evaluation batch size")
    parser.add_argument("--power", type=int, default=3)
    parser.add_argument("--repeats", type=int, default=7)
    args = parser.parse_args()

    rng = np.random.default_rng(7)
    dl = -rng.uniform(0.2, 0.5, (args.modes, args.ny))
    du = -rng.uniform(0.2, 0.5, (args.modes, args.ny))
    d = 1.0 - dl - du + rng.uniform(0.0, 1.0, (args.modes, args.ny))
    b = rng.standard_normal((args.modes, args.ny))
    x = rng.standard_normal(args.points) * 3.0

    impls = [backends.REFERENCE]
    if backends.COMPILED is not None:
        impls.append(backends.COMPILED)
    else:
        print("note: compiled extension not built, timing reference only")

    results = {}
    for impl in impls:
        tt = best_time(lambda: impl.thomas_batch_impl(dl, d, du, b),
                       args.repeats)
        out = np.empty_like(x)
        tp = best_time(lambda: impl.poly_resolvent_impl(x, 0.1, args.power,
                                                        out),
                       args.repeats)
        results[impl.name] = (tt, tp,
                              impl.thomas_batch_impl(dl, d, du, b),
                              out.copy())

    print(f"{'backend':<12}{'thomas_batch':>16}{'poly_resolvent':>18}")
    for name, (tt, tp, _, _) in results.items():
        print(f"{name:<12}{tt * 1e3:>13.2f} ms{tp * 1e3:>15.2f} ms")

    if len(results) == 2:
        ref = results["reference"]
        comp = results["compiled"]
        print(f"\nspeedup: thomas {ref[0] / comp[0]:.2f}x, "
              f"resolvent {ref[1] / comp[1]:.2f}x")
        print(f"max |difference|: thomas {np.max(np.abs(ref[2] - comp[2])):.3e}, "
              f"resolvent {np.max(np.abs(ref[3] - comp[3])):.3e}")


if __name__ == "__main__":
    main()
