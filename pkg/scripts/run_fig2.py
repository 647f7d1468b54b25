"""Console summary of the flagship preset: eight learners on five channels.

Runs the `fig2` preset, prints convergence and aggregate statistics next to
the random baseline, and shows how close the learned profiles get to the
single-occupant capacity budget. For CSV/SVG artifacts use the CLI instead:

    specgame experiment --preset fig2 --plot --out runs/fig2
"""

import argparse
from dataclasses import replace

import numpy as np

from specgame.capacity import RateDistribution, effective_capacity
from specgame.config import preset_config
from specgame.simulator import run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument(
        "--trials", type=int, default=48, help="trial count (the preset ships 200)"
    )
    ap.add_argument("--seed", type=int, default=None, help="override the base seed")
    args = ap.parse_args()

    sim = replace(preset_config("fig2").sim, trials=args.trials)
    if args.seed is not None:
        sim = replace(sim, base_seed=args.seed)

    learned = run_experiment(sim)
    baseline = run_experiment(replace(sim, algorithm="random"))

    theta = sim.game.thetas[0]
    solo = sum(
        effective_capacity(RateDistribution(ch.rates, ch.probs), theta)
        for ch in sim.game.channels
    )
    conv = [r.conv_slot for r in learned.results if r.conv_slot is not None]
    print(f"trials {sim.trials}, iterations {sim.iterations}, theta {theta:g}")
    line = f"converged {len(conv)}/{sim.trials}"
    if conv:
        line += f", median slot {int(np.median(conv))}"
    print(line)
    print(
        f"aggregate EC  learned {learned.mean_agg_closed:.4f} "
        f"+- {learned.std_agg_closed:.4f}"
    )
    print(
        f"aggregate EC  random  {baseline.mean_agg_closed:.4f} "
        f"+- {baseline.std_agg_closed:.4f}"
    )
    print(
        f"single-occupant budget {solo:.4f} "
        f"(learned ratio {learned.mean_agg_closed / solo:.4f})"
    )


if __name__ == "__main__":
    main()
