#!/usr/bin/env python3
"""Desk-scale Q-learning run: trains against the simulator on a generated
corpus and reports the greedy policy's held-out performance next to the two
rule policies.

Usage:
    python scripts/train_dqn.py [--steps 200000] [--seed 0] [--out-dir runs/dqn]
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from apidialog.corpus import generate_corpus, load_dataset, parse_dataset
from apidialog.harness import mean_core_rewards, run_evaluation, success_rates
from apidialog.policies import HandCraftedPolicy, SingleTurnPolicy
from apidialog.qlearn import LearnedPolicy, TrainingConfig, train_policy, write_curve_csv
from apidialog.usersim import SimulatorParams


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--corpus", help="corpus JSON; generated when omitted")
    parser.add_argument("--out-dir", default="runs/dqn")
    args = parser.parse_args()

    if args.corpus:
        dataset = load_dataset(args.corpus)
    else:
        dataset = parse_dataset(generate_corpus(count=100, vocab_size=220, seed=3))

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = TrainingConfig(total_steps=args.steps)
    params = SimulatorParams()

    start = time.time()
    result = train_policy(
        dataset,
        params,
        cfg,
        seed=args.seed,
        out_dir=str(out_dir),
        progress=lambda rec: print(
            f"step {rec['step']:>8}: mean core reward {rec['mean_core_reward']:8.3f}, "
            f"success {rec['success_rate']:.2f}",
            flush=True,
        ),
    )
    print(f"trained {result.steps_run} steps in {time.time() - start:.0f}s")
    write_curve_csv(out_dir / "learning_curve.csv", result.curve)

    held_out = run_evaluation(
        dataset,
        [SingleTurnPolicy(), HandCraftedPolicy(), LearnedPolicy(result.net)],
        n=200,
        base_seed=5_000_000,
        simulator_params=params,
    )
    for name, mean, rate in zip(
        ["single-turn", "hand-crafted", "learned"], mean_core_rewards(held_out), success_rates(held_out)
    ):
        print(f"{name:>12}: held-out mean core reward {mean:8.3f}   success rate {rate:.3f}")
    print(f"checkpoints: {result.checkpoint_paths}")


if __name__ == "__main__":
    main()
