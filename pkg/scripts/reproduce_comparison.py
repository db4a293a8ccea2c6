"""Hadamard, random and optimized ten-step walks from |0, L>.

Writes step-density.csv (site/step densities of all three walks) and
schmidt.csv (Schmidt norm per step, one column per walk) to --out.
"""

import argparse
from pathlib import Path

from hybridwalk.basin_hopper import OptimizerConfig
from hybridwalk.experiment_harness import run_comparison, write_manifest, write_walk_outputs
from hybridwalk.walk_core import BlochAngles


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--hops", type=int, default=100)
    parser.add_argument("--out", default="out/comparison")
    args = parser.parse_args()

    cfg = OptimizerConfig(n_hops=args.hops, rng_seed=args.seed)
    runs = run_comparison(args.steps, BlochAngles(0.0, 0.0), cfg)
    out = Path(args.out)
    write_manifest(out, "reproduce_comparison", args=vars(args), optimizer=cfg)
    write_walk_outputs(out, list(runs.values()))
    for name, run in runs.items():
        print(f"{name:>9}: final S = {run.final_schmidt:.10f}")


if __name__ == "__main__":
    main()
