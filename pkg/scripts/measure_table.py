"""Pair-hit measure by quadrature next to the Monte Carlo oracle.

    python scripts/measure_table.py --samples 1000000
"""
import argparse

from cylcover.measure import mc_pair_oracle, pair_hit_measure


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    print(f"{'d':>2} {'r':>5} {'quadrature':>12} {'monte carlo':>12} {'se':>9} {'z':>6}")
    for d in (2, 3, 4):
        for r in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
            q = pair_hit_measure(r, d).value
            mc = mc_pair_oracle(r, d, a.samples, seed=a.seed)
            z = (mc.value - q) / mc.abs_error if mc.abs_error else 0.0
            print(f"{d:>2} {r:5.1f} {q:12.6f} {mc.value:12.6f} {mc.abs_error:9.2e} {z:+6.2f}")


if __name__ == "__main__":
    main()
