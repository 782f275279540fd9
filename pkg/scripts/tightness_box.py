"""Quantile bands of the centred cover-time bracket for n * [0,1]^d.

    python scripts/tightness_box.py --n-list 8,16,32,64 --reps 500 --D 1
"""
import argparse
import json
from pathlib import Path

from cylcover.net import unit_box
from cylcover.verify import tightness_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=2)
    ap.add_argument("--D", type=float, default=1.0)
    ap.add_argument("--c-a", type=float, default=None,
                    help="content constant for the conjecture probe")
    ap.add_argument("--n-list", default="8,16,32,64")
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/tightness")
    a = ap.parse_args()
    rep = tightness_experiment(unit_box(a.d), float(a.d), a.c_a, a.D,
                               [int(v) for v in a.n_list.split(",")], a.reps,
                               seed=a.seed, workers=a.workers)
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.with_suffix(".json").write_text(json.dumps(rep.to_dict(), indent=1, sort_keys=True))
    for r in rep.rows:
        td, tw = r["band_td"], r["band_tw"]
        print(f"n={r['n']:>4} rho={r['rho']:.3f} N={r['net_count']:>7}  "
              f"t_d [{td['q05']:+.2f} {td['q50']:+.2f} {td['q95']:+.2f}]  "
              f"t_w [{tw['q05']:+.2f} {tw['q50']:+.2f} {tw['q95']:+.2f}]")
    for end in ("td", "tw"):
        s = rep.summary[end]
        print(end, "trend per quantile:",
              {q: round(v["trend"], 3) for q, v in s["drifts"].items()},
              "control drift", round(s["control_drift"], 3))


if __name__ == "__main__":
    main()
