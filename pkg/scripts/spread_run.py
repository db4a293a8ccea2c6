"""Maximize S + beta * PR at N = 10 and print the final site populations."""

import argparse
from pathlib import Path

from hybridwalk.basin_hopper import OptimizerConfig
from hybridwalk.experiment_harness import run_spread, write_manifest, write_rows, write_walk_outputs
from hybridwalk.walk_core import BlochAngles


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=10)
    parser.add_argument("--beta", type=float, default=0.1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="out/spread")
    args = parser.parse_args()

    cfg = OptimizerConfig(rng_seed=args.seed)
    res = run_spread(args.steps, args.beta, BlochAngles(0.0, 0.0), cfg)
    out = Path(args.out)
    write_manifest(out, "spread_run", args=vars(args), optimizer=cfg)
    write_walk_outputs(out, [res.run])
    pop = res.final_density.sum(axis=1)
    sites = res.run.final.sites
    write_rows(out / "final_density.csv", ["site", "density"], zip(sites.tolist(), pop.tolist()))
    print(f"S = {res.schmidt_norm:.8f}, PR = {res.participation_ratio:.4f}")
    for j, p in zip(sites, pop):
        print(f"{j:+3d} {p:.6f}")


if __name__ == "__main__":
    main()
