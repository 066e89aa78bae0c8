"""Rule-based dialogue policies: the reactive single-turn baseline and the
threshold-driven hand-crafted policy, plus grid-search calibration of the
hand-crafted thresholds."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from apidialog.acts import NAVIGATION_PAIRS, DialogueActType, DialogueState, Session


@dataclass(frozen=True)
class PolicyDecision:
    act_type: DialogueActType


@dataclass(frozen=True)
class HandCraftedConfig:
    """Thresholds on the top-ranked similarity score.

    Below ``t_query`` the policy asks the user to rephrase; below
    ``t_keywords`` it suggests keywords; above ``t_sugg`` it recommends a
    function; above ``t_info`` it recommends with full documentation.
    Shipped defaults come from grid-searching against the simulator.
    """

    t_query: float = 0.05
    t_keywords: float = 0.10
    t_sugg: float = 0.20
    t_info: float = 0.50
    unsure_window: int = 3

    def __post_init__(self):
        if not 0.0 <= self.t_query <= self.t_keywords <= self.t_sugg <= self.t_info <= 1.0:
            raise ValueError("thresholds must satisfy 0 <= t_query <= t_keywords <= t_sugg <= t_info <= 1")


def single_turn_decide(state: DialogueState) -> PolicyDecision:
    """Answer navigation requests; list the top results for everything else."""
    paired = NAVIGATION_PAIRS.get(state.last_user_act_type)
    if paired is not None:
        return PolicyDecision(paired)
    return PolicyDecision(DialogueActType.LIST_RESULTS)


def hand_crafted_decide(state: DialogueState, cfg: HandCraftedConfig) -> PolicyDecision:
    """Threshold rules over the top similarity score.

    Navigation requests and unsure take precedence; query refinement is
    suppressed for ``unsure_window`` user turns after an unsure act.
    """
    paired = NAVIGATION_PAIRS.get(state.last_user_act_type)
    if paired is not None:
        return PolicyDecision(paired)
    if state.last_user_act_type is DialogueActType.UNSURE:
        return PolicyDecision(DialogueActType.LIST_RESULTS)

    top_score = state.top_score()
    if state.unsure_recency >= cfg.unsure_window:
        if top_score < cfg.t_query:
            return PolicyDecision(DialogueActType.REQUEST_QUERY)
        if top_score < cfg.t_keywords:
            return PolicyDecision(DialogueActType.SUGG_KEYWORDS)
    if top_score >= cfg.t_info:
        return PolicyDecision(DialogueActType.SUGG_INFO_API)
    if top_score >= cfg.t_sugg:
        return PolicyDecision(DialogueActType.SUGG_API)
    return PolicyDecision(DialogueActType.LIST_RESULTS)


class SingleTurnPolicy:
    name = "single-turn"

    def decide(self, session: Session) -> PolicyDecision:
        return single_turn_decide(session.state)


class HandCraftedPolicy:
    name = "hand-crafted"

    def __init__(self, cfg: HandCraftedConfig | None = None):
        self.cfg = cfg or HandCraftedConfig()

    def decide(self, session: Session) -> PolicyDecision:
        return hand_crafted_decide(session.state, self.cfg)


DEFAULT_GRID: dict[str, list[float]] = {
    "t_query": [0.0, 0.05, 0.1],
    "t_keywords": [0.05, 0.1, 0.15],
    "t_sugg": [0.1, 0.15, 0.2],
    "t_info": [0.3, 0.4, 0.5],
}


@dataclass
class GridSearchResult:
    best: HandCraftedConfig
    best_mean_core_reward: float
    cells: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "winner": {
                "t_query": self.best.t_query,
                "t_keywords": self.best.t_keywords,
                "t_sugg": self.best.t_sugg,
                "t_info": self.best.t_info,
                "unsure_window": self.best.unsure_window,
            },
            "winner_mean_core_reward": self.best_mean_core_reward,
            "cells": self.cells,
        }


def grid_cells(grid: dict[str, list[float]], unsure_window: int = 3) -> list[HandCraftedConfig]:
    """Cartesian product of the grid, keeping only threshold-ordered cells."""
    cells = []
    for tq, tk, ts, ti in itertools.product(
        grid["t_query"], grid["t_keywords"], grid["t_sugg"], grid["t_info"]
    ):
        if 0.0 <= tq <= tk <= ts <= ti <= 1.0:
            cells.append(HandCraftedConfig(tq, tk, ts, ti, unsure_window))
    return cells


def grid_search(
    grid: dict[str, list[float]],
    dataset,
    simulator_params,
    episodes_per_cell: int,
    seed: int,
) -> GridSearchResult:
    """Evaluate every ordered cell on the same episode seeds and return the
    argmax-mean-core-reward configuration.

    Ties break toward smaller ``t_info`` then smaller ``t_sugg`` (then the
    remaining thresholds, for full determinism).
    """
    from apidialog.harness import run_episode

    if episodes_per_cell < 1:
        raise ValueError("episodes_per_cell must be >= 1")
    cells = grid_cells(grid)
    if not cells:
        raise ValueError("grid contains no cells satisfying the threshold ordering")

    results = []
    for cfg in cells:
        policy = HandCraftedPolicy(cfg)
        total = 0.0
        for i in range(episodes_per_cell):
            metrics, _ = run_episode(dataset, policy, simulator_params, seed=seed + i)
            total += metrics.total_core_reward
        mean = total / episodes_per_cell
        results.append((mean, cfg))

    best_mean, best_cfg = max(
        results,
        key=lambda mc: (mc[0], -mc[1].t_info, -mc[1].t_sugg, -mc[1].t_keywords, -mc[1].t_query),
    )
    cell_records = [
        {
            "t_query": cfg.t_query,
            "t_keywords": cfg.t_keywords,
            "t_sugg": cfg.t_sugg,
            "t_info": cfg.t_info,
            "mean_core_reward": mean,
        }
        for mean, cfg in results
    ]
    return GridSearchResult(best=best_cfg, best_mean_core_reward=best_mean, cells=cell_records)
