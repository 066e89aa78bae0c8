#!/usr/bin/env python3
"""Desk-scale synthetic evaluation: paired episodes for each policy on a
generated corpus, means, success rates, and the Friedman test.

Usage:
    python scripts/run_synthetic_eval.py [--episodes 200] [--seed 1000]
        [--corpus path.json] [--checkpoint ckpt.json]

Without --corpus a 100-function synthetic corpus is generated in memory.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from apidialog.corpus import generate_corpus, load_dataset, parse_dataset
from apidialog.harness import friedman_test, mean_core_rewards, run_evaluation, success_rates
from apidialog.policies import HandCraftedPolicy, SingleTurnPolicy
from apidialog.usersim import SimulatorParams


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--episodes", type=int, default=200)
    parser.add_argument("--seed", type=int, default=1000)
    parser.add_argument("--corpus", help="corpus JSON; generated when omitted")
    parser.add_argument("--checkpoint", help="include the learned policy from this checkpoint")
    parser.add_argument("--out", default="synthetic_eval.json")
    args = parser.parse_args()

    if args.corpus:
        dataset = load_dataset(args.corpus)
    else:
        dataset = parse_dataset(generate_corpus(count=100, vocab_size=220, seed=3))
    print(f"corpus: {dataset.api} ({len(dataset)} components)")

    policies = [SingleTurnPolicy(), HandCraftedPolicy()]
    if args.checkpoint:
        from apidialog.qlearn import LearnedPolicy, load_checkpoint

        net, _ = load_checkpoint(args.checkpoint)
        policies.append(LearnedPolicy(net))
    names = [p.name for p in policies]

    params = SimulatorParams()
    matrix = run_evaluation(dataset, policies, n=args.episodes, base_seed=args.seed, simulator_params=params)
    means = mean_core_rewards(matrix)
    rates = success_rates(matrix)
    for name, mean, rate in zip(names, means, rates):
        print(f"{name:>12}: mean core reward {mean:8.3f}   success rate {rate:.3f}")

    rewards = [[m.total_core_reward for m in row] for row in matrix]
    result = friedman_test(rewards)
    print(f"\nFriedman Q = {result.q_observed:.3f} (critical {result.q_critical:.3f}, df={result.df})")
    print(f"critical difference for rank sums: {result.critical_difference:.3f}")
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            if i < j:
                gap = result.pairwise_diffs[i][j]
                mark = "significant" if gap > result.critical_difference else "not significant"
                print(f"  |R({a}) - R({b})| = {gap:.1f} ({mark})")

    payload = {
        "config": {
            "episodes": args.episodes,
            "base_seed": args.seed,
            "corpus": args.corpus or "generated(count=100, vocab_size=220, seed=3)",
            "simulator_params": params.to_dict(),
        },
        "mean_core_reward": dict(zip(names, means)),
        "success_rate": dict(zip(names, rates)),
        "friedman": result.to_dict(),
        "per_episode_rewards": rewards,
    }
    Path(args.out).write_text(json.dumps(payload, indent=2))
    print(f"\nwrote {args.out}")


if __name__ == "__main__":
    main()
