"""Compare the compiled and numpy jet-product backends.

Usage: python benchmarks/bench_backends.py [--repeat N]

Times the raw truncated product on a few jet spaces, then an end-to-end
general-spray jet evaluation, and checks that both backends agree bit for bit.
"""

import argparse
import time

import numpy as np

from finsler_lab import jets
from finsler_lab.profiles import funk
from finsler_lab.runner.sampling import candidate
from finsler_lab.spray import GeneralSpray


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_products(repeat):
    rng = np.random.default_rng(0)
    rows = []
    for label, space in (("s-jets deg 4", jets.s_space(4)),
                         ("rs-jets r<=2 s<=6", jets.rs_space()),
                         ("xy-jets n=3 x<=1 y<=5", jets.xy_space(3, 1, 5)),
                         ("xy-jets n=4 x<=1 y<=5", jets.xy_space(4, 1, 5))):
        a = jets.Jet(space, rng.standard_normal(space.size))
        b = jets.Jet(space, rng.standard_normal(space.size))
        out = {}
        for name in jets.available_backends():
            jets.set_backend(name)
            out[name] = ((a * b).coeffs, _best(lambda: [a * b for _ in range(200)], repeat) / 200)
        rows.append((label, space.size, out))
    return rows


def bench_spray(repeat):
    prof = funk()
    provider = GeneralSpray(prof.metric())
    rows = []
    for n in (2, 3, 4):
        rng = np.random.default_rng(n)
        points = [candidate(rng, n, (0.1, 0.8)) for _ in range(5)]
        out = {}
        for name in jets.available_backends():
            jets.set_backend(name)
            coeffs = [g.coeffs for g in provider.jets(points[0], 3)]
            out[name] = (np.concatenate(coeffs),
                         _best(lambda: [provider.jets(p, 3) for p in points], repeat) / len(points))
        rows.append((f"general spray jets n={n}", None, out))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    names = jets.available_backends()
    previous = jets.get_backend()
    if "compiled" not in names:
        print("compiled backend not built; only the numpy backend is timed")
    try:
        rows = bench_products(args.repeat) + bench_spray(args.repeat)
    finally:
        jets.set_backend(previous)

    header = f"{'case':<26}{'size':>6}" + "".join(f"{n + ' (us)':>16}" for n in names)
    if len(names) > 1:
        header += f"{'speedup':>10}{'identical':>11}"
    print(header)
    for label, size, out in rows:
        line = f"{label:<26}{size if size is not None else '':>6}"
        line += "".join(f"{out[n][1] * 1e6:>16.1f}" for n in names)
        if len(names) > 1:
            speedup = out["python"][1] / out["compiled"][1]
            same = np.array_equal(out["python"][0], out["compiled"][0])
            line += f"{speedup:>9.2f}x{str(same):>11}"
        print(line)


if __name__ == "__main__":
    main()
