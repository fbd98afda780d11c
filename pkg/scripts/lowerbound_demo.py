"""Builds the design instance, stresses the implication and prints the counting decay.

    python3 scripts/lowerbound_demo.py --stress 100000
"""
import argparse

from calreg import lowerbound as lb
from calreg.instances import substream


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--m", type=int, default=50)
    ap.add_argument("--stress", type=int, default=100_000)
    args = ap.parse_args()

    rng = substream(args.seed, "lowerbound-demo")
    design = lb.build_design(256, 1 / 16, args.m, rng)
    inst = lb.build_lb_instance(design, rng)
    print(f"design: n=256 m={design.m} set size={len(design.sets[0])} audit={design.audit()}")
    print(f"entropy bound slack={lb.verify_entropy_bound(inst):.4f} (cap 0.25)")
    s = lb.stress_test(inst, args.stress, rng)
    print(f"stress: size={s.size} counterexamples={s.counterexamples} non_vacuous={s.non_vacuous} "
          f"calibration_premise={s.calibration_premise_cases} min_conclusion={s.min_conclusion_when_premised:.3f}")
    c = lb.counting_sweep(inst, (10, 20, 40), seed=args.seed)
    for k, f in zip(c.sizes, c.fractions):
        print(f"counting |X'|={k}: success fraction {f:.4f}")
    print(f"log slope={c.log_slope:.4f} strictly decreasing={c.strictly_decreasing}")


if __name__ == "__main__":
    main()
