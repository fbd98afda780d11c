"""Update counts of the boosting loop against eps and L, next to the potential cap.

    python3 scripts/eps_scaling_sweep.py --seeds 10
"""
import argparse

import numpy as np

from calreg.instances import InstanceSpec, random_regularity_instance
from calreg.regularity import run_regularity, update_cap


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--N", type=int, default=32)
    args = ap.parse_args()

    print("L,eps,mean_updates,max_updates,cap,mean_updates_x_eps2")
    for L in (2, 4, 8, 16):
        for eps in (0.1, 0.2, 0.4):
            ups = [run_regularity(random_regularity_instance(InstanceSpec(N=args.N, L=L, eps=eps), s)).updates
                   for s in range(args.seeds)]
            print(f"{L},{eps},{np.mean(ups):.2f},{max(ups)},{update_cap(L, eps)},{np.mean(ups) * eps**2:.4f}")


if __name__ == "__main__":
    main()
