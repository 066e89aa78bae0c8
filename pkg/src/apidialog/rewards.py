"""Per-turn reward signals: the core reward used for evaluation and the
shaped reward used only when training against the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

from apidialog.acts import NAVIGATION_PAIRS, DialogueActType


@dataclass(frozen=True)
class RewardConfig:
    turn_penalty: float = -1.0
    light_act_penalty: float = -0.3   # listResults, changePage
    heavy_act_penalty: float = -0.5   # infoAllAPI, suggInfoAPI
    rank_reward_cap: float = 5.0
    success_reward: float = 10.0
    nav_violation_penalty: float = -10.0
    unsure_penalty: float = -1.0
    light_acts: frozenset[DialogueActType] = frozenset(
        {DialogueActType.LIST_RESULTS, DialogueActType.CHANGE_PAGE}
    )
    heavy_acts: frozenset[DialogueActType] = frozenset(
        {DialogueActType.INFO_ALL_API, DialogueActType.SUGG_INFO_API}
    )


@dataclass
class TurnContext:
    """Everything the reward functions need about one system turn.

    ``preceding_user_act_type`` is the user act the system responded to.
    The training-only fields describe the consequences of the turn: the
    hidden target's rank before and after the user's reaction, whether the
    turn completed the search, and whether the user's reaction was unsure.
    """

    system_act_type: DialogueActType
    preceding_user_act_type: DialogueActType | None
    target_rank_before: int | None = None
    target_rank_after: int | None = None
    success: bool = False
    user_was_unsure: bool = False


def is_navigation_response(user_act: DialogueActType | None, system_act: DialogueActType) -> bool:
    """True when the system act is the paired response to the user's
    standard-navigation request."""
    return user_act is not None and NAVIGATION_PAIRS.get(user_act) is system_act


def core_reward(ctx: TurnContext, cfg: RewardConfig = RewardConfig()) -> float:
    """Turn penalty plus the act penalty, with the act penalty waived when
    the system is answering the matching standard-navigation request."""
    reward = cfg.turn_penalty
    if not is_navigation_response(ctx.preceding_user_act_type, ctx.system_act_type):
        if ctx.system_act_type in cfg.light_acts:
            reward += cfg.light_act_penalty
        elif ctx.system_act_type in cfg.heavy_acts:
            reward += cfg.heavy_act_penalty
    return reward


def rank_improvement_reward(
    rank_before: int,
    rank_after: int,
    dataset_size: int,
    cfg: RewardConfig = RewardConfig(),
) -> float:
    """Linear in the rank gain, saturating at the cap exactly when the
    target jumps from last place to first."""
    delta = rank_before - rank_after
    if delta <= 0 or dataset_size < 2:
        return 0.0
    return min(cfg.rank_reward_cap, cfg.rank_reward_cap * delta / (dataset_size - 1))


def training_reward(
    ctx: TurnContext,
    cfg: RewardConfig = RewardConfig(),
    dataset_size: int = 1,
) -> float:
    """Core reward plus shaping: rank-improvement bonus, success bonus,
    navigation-violation penalty, and the unsure penalty.

    Requires the simulator-private target ranks; evaluation code must use
    :func:`core_reward` instead.
    """
    if ctx.target_rank_before is None or ctx.target_rank_after is None:
        raise ValueError("training reward needs target ranks from the simulator")

    reward = core_reward(ctx, cfg)
    reward += rank_improvement_reward(ctx.target_rank_before, ctx.target_rank_after, dataset_size, cfg)
    if ctx.success:
        reward += cfg.success_reward
    user = ctx.preceding_user_act_type
    if user in NAVIGATION_PAIRS and NAVIGATION_PAIRS[user] is not ctx.system_act_type:
        reward += cfg.nav_violation_penalty
    if ctx.user_was_unsure:
        reward += cfg.unsure_penalty
    return reward
