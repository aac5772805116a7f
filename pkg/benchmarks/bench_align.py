"""Compare the compiled and pure-Python alignment kernels.

    python3 benchmarks/bench_align.py [--traces 15000] [--events 700000] [--repeat 3]

Both backends score the same synthetic log against the QRFA net; the script
checks they agree exactly and prints best-of-N wall time for each.
"""

import argparse
import random
import time

import numpy as np

from convmine import _kernel
from convmine.conformance import DEFAULT_COST, _compile
from convmine.model import builtin_qrfa, from_definition, generate_traces

LABELS = ("Q", "R", "F", "A")


def synthetic_variants(n_traces: int, n_events: int, seed: int) -> list[tuple[str, ...]]:
    rng = random.Random(seed)
    cuts = sorted(rng.sample(range(1, n_events), n_traces - 1))
    lengths = [b - a for a, b in zip([0] + cuts, cuts + [n_events])]
    base = generate_traces(builtin_qrfa(), n_traces, max_len=200, seed=seed)
    out = []
    for length, t in zip(lengths, base):
        ev = list(t.events)
        while len(ev) < length:
            ev += ev
        ev = ev[:length]
        for _ in range(rng.randint(0, 3)):
            ev[rng.randrange(length)] = rng.choice(LABELS)
        out.append(tuple(ev))
    return list(dict.fromkeys(out))


def best_of(fn, repeat: int) -> tuple[float, np.ndarray]:
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--traces", type=int, default=15_000)
    ap.add_argument("--events", type=int, default=700_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    variants = synthetic_variants(args.traces, args.events, args.seed)
    compiled = _compile(from_definition(builtin_qrfa()), DEFAULT_COST)
    n_events = sum(map(len, variants))
    print(f"{len(variants)} distinct variants, {n_events} events")

    timings = {}
    results = {}
    for name in sorted(_kernel.BACKENDS):
        timings[name], results[name] = best_of(lambda: compiled.batch(variants, name), args.repeat)
        rate = n_events / timings[name] / 1e6
        print(f"{name:>8}: {timings[name]:8.3f} s  ({rate:6.2f} M events/s)")

    if len(results) > 1:
        ref = results["python"]
        for name, r in results.items():
            if not np.array_equal(r, ref):
                raise SystemExit(f"{name} disagrees with the python backend")
        if "cython" in timings:
            print(f"speedup: {timings['python'] / timings['cython']:.1f}x")
    else:
        print("compiled extension not built; only the python backend ran")


if __name__ == "__main__":
    main()
