"""Command-line entry points: corpus generation, threshold calibration,
policy training, simulation, evaluation, statistics, and the HTTP server."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from apidialog.acts import SessionConfig
from apidialog.corpus import generate_corpus, load_dataset
from apidialog.policies import DEFAULT_GRID, HandCraftedConfig, HandCraftedPolicy, SingleTurnPolicy, grid_search
from apidialog.usersim import SimulatorParams


def _load_params(path: str | None) -> SimulatorParams:
    return SimulatorParams.load(path) if path else SimulatorParams()


def _session_config(args) -> SessionConfig:
    return SessionConfig(
        page_size=getattr(args, "page_size", 6),
        keyword_count=getattr(args, "keyword_count", 6),
        max_turns=getattr(args, "max_turns", 25),
    )


def _build_policies(args, dataset):
    """Policy registry for evaluate/compare/serve; 'learned' needs a
    checkpoint."""
    policies = {
        "single-turn": SingleTurnPolicy(),
        "hand-crafted": HandCraftedPolicy(_hand_crafted_config(args)),
    }
    checkpoint = getattr(args, "checkpoint", None)
    if checkpoint:
        from apidialog.qlearn import LearnedPolicy, load_checkpoint

        net, _ = load_checkpoint(checkpoint)
        policies["learned"] = LearnedPolicy(net)
    return policies


def _hand_crafted_config(args) -> HandCraftedConfig:
    path = getattr(args, "thresholds", None)
    if not path:
        return HandCraftedConfig()
    with open(path, encoding="utf-8") as f:
        data = json.load(f)
    data.pop("mean_core_reward", None)
    return HandCraftedConfig(**data)


def _provenance(args, simulator_params: SimulatorParams, extra: dict | None = None) -> dict:
    record = {
        "argv": sys.argv[1:],
        "simulator_params": simulator_params.to_dict(),
    }
    record.update(extra or {})
    return record


def cmd_gen_corpus(args):
    doc = generate_corpus(count=args.count, vocab_size=args.vocab_size, seed=args.seed, api=args.api)
    with open(args.out, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
    print(f"wrote {args.count} components to {args.out}")


def cmd_grid_search(args):
    dataset = load_dataset(args.corpus)
    params = _load_params(args.sim_params)
    if args.grid:
        with open(args.grid, encoding="utf-8") as f:
            grid = json.load(f)
    else:
        grid = DEFAULT_GRID
    result = grid_search(grid, dataset, params, episodes_per_cell=args.episodes_per_cell, seed=args.seed)
    payload = {"grid": grid, "config": _provenance(args, params), **result.to_dict()}
    out = args.out or "grid_search.json"
    with open(out, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
    print(f"winner: {result.to_dict()['winner']} (mean core reward {result.best_mean_core_reward:.3f})")
    print(f"wrote {out}")


def cmd_train(args):
    from apidialog.qlearn import TrainingConfig, train_policy, write_curve_csv

    dataset = load_dataset(args.corpus)
    params = _load_params(args.sim_params)
    os.makedirs(args.out_dir, exist_ok=True)
    cfg = TrainingConfig(
        total_steps=args.steps,
        eval_every=args.eval_every,
        eval_episodes=args.eval_episodes,
        checkpoint_every=args.checkpoint_every,
    )
    result = train_policy(
        dataset,
        params,
        cfg,
        seed=args.seed,
        out_dir=args.out_dir,
        session_config=_session_config(args),
        progress=lambda rec: print(
            f"step {rec['step']}: mean core reward {rec['mean_core_reward']:.3f}, "
            f"success rate {rec['success_rate']:.2f}",
            flush=True,
        ),
    )
    curve_path = os.path.join(args.out_dir, "learning_curve.csv")
    write_curve_csv(curve_path, result.curve)
    meta = {
        "config": _provenance(args, params, {"training": cfg.__dict__ | {"layer_sizes": list(cfg.layer_sizes)}}),
        "checkpoints": result.checkpoint_paths,
        "steps_run": result.steps_run,
    }
    with open(os.path.join(args.out_dir, "run.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
    print(f"trained {result.steps_run} steps; curve at {curve_path}")


def cmd_simulate(args):
    from apidialog.harness import run_episode

    dataset = load_dataset(args.corpus)
    params = _load_params(args.sim_params)
    policy = _build_policies(args, dataset)[args.policy]
    metrics, session = run_episode(dataset, policy, params, seed=args.seed, config=_session_config(args))
    for entry in session.transcript:
        payload = "" if entry.act.payload is None else f" {entry.act.payload}"
        reward = "" if entry.reward_core is None else f"  [core {entry.reward_core:+.1f}]"
        print(f"turn {entry.turn:>2} {entry.actor:>6}: {entry.act.act_type.wire_name}{payload}{reward}")
    print(
        f"-- total core reward {metrics.total_core_reward:.1f}, "
        f"{'success' if metrics.success else 'failure'} in {metrics.turns} turns"
    )


def cmd_evaluate(args):
    from apidialog.harness import friedman_test, mean_core_rewards, run_evaluation, success_rates

    dataset = load_dataset(args.corpus)
    params = _load_params(args.sim_params)
    registry = _build_policies(args, dataset)
    try:
        policies = [registry[name] for name in args.policies]
    except KeyError as exc:
        raise SystemExit(f"unknown policy {exc} (choose from {sorted(registry)})")

    matrix = run_evaluation(
        dataset, policies, n=args.episodes, base_seed=args.seed, simulator_params=params,
        config=_session_config(args),
    )
    rewards = [[m.total_core_reward for m in row] for row in matrix]
    payload = {
        "config": _provenance(args, params, {"policies": args.policies, "episodes": args.episodes, "base_seed": args.seed}),
        "mean_core_reward": dict(zip(args.policies, mean_core_rewards(matrix))),
        "success_rate": dict(zip(args.policies, success_rates(matrix))),
    }
    if len(policies) >= 2:
        payload["friedman"] = friedman_test(rewards, alpha=args.alpha).to_dict()

    out_json = args.out or "evaluation.json"
    with open(out_json, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
    csv_path = os.path.splitext(out_json)[0] + ".csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["episode", "seed"] + [f"reward_{p}" for p in args.policies] + [f"success_{p}" for p in args.policies])
        for i, row in enumerate(matrix):
            writer.writerow([i, row[0].seed] + [m.total_core_reward for m in row] + [int(m.success) for m in row])

    for name in args.policies:
        print(
            f"{name}: mean core reward {payload['mean_core_reward'][name]:.3f}, "
            f"success rate {payload['success_rate'][name]:.3f}"
        )
    if "friedman" in payload:
        fr = payload["friedman"]
        verdict = "significant" if fr["significant"] else "not significant"
        print(f"Friedman Q = {fr['q_observed']:.3f} vs critical {fr['q_critical']:.3f} ({verdict})")
    print(f"wrote {out_json} and {csv_path}")


def cmd_compare(args):
    from apidialog.harness import compare_policies

    dataset = load_dataset(args.corpus)
    params = _load_params(args.sim_params)
    registry = _build_policies(args, dataset)
    comparison = compare_policies(
        dataset,
        registry[args.policy_a],
        registry[args.policy_b],
        episodes=args.episodes,
        seed=args.seed,
        simulator_params=params,
        config=_session_config(args),
    )
    out = args.out or "comparison.csv"
    with open(out, "w", newline="", encoding="utf-8") as f:
        csv.writer(f).writerows(comparison.to_rows())
    print(
        f"{args.policy_a} diverged from {args.policy_b} in "
        f"{comparison.divergence_rate:.1%} of {comparison.episodes} episodes "
        f"({comparison.decisions} decisions)"
    )
    print(f"wrote {out}")


def cmd_stats(args):
    from apidialog.harness import friedman_test

    with open(args.matrix, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if args.header:
        rows = rows[1:]
    matrix = [[float(v) for v in row] for row in rows if row]
    result = friedman_test(matrix, alpha=args.alpha, bonferroni=args.bonferroni)
    print(json.dumps(result.to_dict(), indent=2))


def cmd_serve(args):
    import uvicorn

    from apidialog.service import create_app

    corpora = {}
    for path in args.corpus:
        dataset = load_dataset(path)
        name = os.path.splitext(os.path.basename(path))[0]
        corpora[name] = dataset
    first = next(iter(corpora.values()))
    policies = _build_policies(args, first)
    static_dir = args.static_dir if args.static_dir and os.path.isdir(args.static_dir) else None
    app = create_app(
        corpora,
        policies,
        default_policy=args.policy,
        session_config=_session_config(args),
        session_seed=args.seed,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


def _add_common(parser, sim_params=True, session=True):
    parser.add_argument("--seed", type=int, default=0)
    if sim_params:
        parser.add_argument("--sim-params", help="SimulatorParams JSON file")
    if session:
        parser.add_argument("--page-size", type=int, default=6, dest="page_size")
        parser.add_argument("--keyword-count", type=int, default=6, dest="keyword_count")
        parser.add_argument("--max-turns", type=int, default=25, dest="max_turns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apidialog", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="emit a synthetic corpus JSON file")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--vocab-size", type=int, default=220, dest="vocab_size")
    p.add_argument("--api", default="synthetic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("grid-search", help="calibrate hand-crafted thresholds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--grid", help="grid JSON (lists for t_query/t_keywords/t_sugg/t_info)")
    p.add_argument("--episodes-per-cell", type=int, default=20, dest="episodes_per_cell")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("train", help="train the learned policy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--steps", type=int, default=200_000)
    p.add_argument("--eval-every", type=int, default=20_000, dest="eval_every")
    p.add_argument("--eval-episodes", type=int, default=50, dest="eval_episodes")
    p.add_argument("--checkpoint-every", type=int, default=50_000, dest="checkpoint_every")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="print one simulated episode")
    p.add_argument("--corpus", required=True)
    p.add_argument("--policy", default="hand-crafted")
    p.add_argument("--checkpoint", help="checkpoint JSON for the learned policy")
    p.add_argument("--thresholds", help="hand-crafted thresholds JSON")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="paired-seed evaluation of policies")
    p.add_argument("--corpus", required=True)
    p.add_argument("--policies", nargs="+", default=["single-turn", "hand-crafted"])
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--checkpoint", help="checkpoint JSON for the learned policy")
    p.add_argument("--thresholds", help="hand-crafted thresholds JSON")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="shadow one policy with another")
    p.add_argument("--corpus", required=True)
    p.add_argument("--policy-a", required=True, dest="policy_a")
    p.add_argument("--policy-b", required=True, dest="policy_b")
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--checkpoint", help="checkpoint JSON for the learned policy")
    p.add_argument("--thresholds", help="hand-crafted thresholds JSON")
    p.add_argument("--out")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("stats", help="Friedman test on a CSV matrix (blocks x policies)")
    p.add_argument("matrix")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--header", action="store_true", help="skip the first row")
    p.add_argument("--bonferroni", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--corpus", action="append", required=True, help="corpus JSON (repeatable)")
    p.add_argument("--policy", default="hand-crafted")
    p.add_argument("--checkpoint", help="checkpoint JSON for the learned policy")
    p.add_argument("--thresholds", help="hand-crafted thresholds JSON")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static-dir", default="frontend/dist", dest="static_dir")
    _add_common(p, sim_params=False)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
