"""Success rate of the sample-based loop with ERM oracles over seeded runs.

    python3 scripts/uniform_trials.py --runs 50 --eps 0.25
"""
import argparse

import numpy as np

from calreg import uniform as un
from calreg.instances import notion_weights, random_fields, random_kernel, substream
from calreg.regularity import DistinguisherFamily, WeightFamily


def one_run(seed, N, L, eps, delta):
    rng = substream(seed, "uniform-trials")
    g = random_kernel(rng, N, L, 0.5, 0.25)
    mu = np.full(N, 1 / N)
    F = DistinguisherFamily(random_fields(rng, g, 16))
    R = WeightFamily(notion_weights(("shannon", "min_entropy", "collision", "sqrt_collision"), eps), L=L)
    A = un.erm_distinguisher(F, un.hoeffding_m(eps / 2, delta, 2 * len(F)))
    B = un.erm_calibration_oracle(R, un.hoeffding_m(eps / 2, delta, len(R)))
    res = un.run_uniform_regularity(un.UniformInstance(mu, g, A, B, eps, delta, seed=seed))
    vf, vr = un.true_violations(res.s, g, mu, F, R)
    samples = sum(n for _, _, n in res.draw_log)
    return res.success, res.updates, vf, vr, samples


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--N", type=int, default=32)
    ap.add_argument("--L", type=int, default=4)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--delta", type=float, default=0.1)
    args = ap.parse_args()

    rows = [one_run(s, args.N, args.L, args.eps, args.delta) for s in range(args.runs)]
    good = [ok and vf <= args.eps and vr <= args.eps for ok, _, vf, vr, _ in rows]
    print(f"runs={args.runs} success_rate={np.mean(good):.3f} target>={1 - args.delta}")
    print(f"updates mean={np.mean([r[1] for r in rows]):.2f} kappa_cap={un.kappa_cap(args.L, args.eps)}")
    print(f"worst true violation F={max(r[2] for r in rows):.4f} R={max(r[3] for r in rows):.4f}")
    print(f"samples per run mean={np.mean([r[4] for r in rows]):.0f}")


if __name__ == "__main__":
    main()
