"""Paired-seed synthetic evaluation: episode driver, metrics, Friedman test
with post-hoc critical differences, and policy-divergence comparison.

The statistics helpers are self-contained (chi-square and normal quantiles
are computed here) so evaluation runs do not pull in a stats dependency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from apidialog.acts import (
    AGENT_ACTIONS,
    DialogueActType,
    Session,
    SessionConfig,
    apply_user_act,
    new_session,
    system_respond,
)
from apidialog.corpus import ApiDataset
from apidialog.usersim import SimulatedUser, SimulatorParams


@dataclass(frozen=True)
class EpisodeMetrics:
    total_core_reward: float
    success: bool
    turns: int
    seed: int


@dataclass
class FriedmanResult:
    q_observed: float
    q_critical: float
    df: int
    p_value: float
    significant: bool
    rank_sums: list[float]
    pairwise_diffs: list[list[float]]
    critical_difference: float

    def to_dict(self) -> dict:
        return {
            "q_observed": self.q_observed,
            "q_critical": self.q_critical,
            "df": self.df,
            "p_value": self.p_value,
            "significant": self.significant,
            "rank_sums": self.rank_sums,
            "pairwise_rank_sum_diffs": self.pairwise_diffs,
            "critical_difference": self.critical_difference,
        }


def run_episode(
    dataset: ApiDataset,
    policy,
    simulator_params: SimulatorParams | None = None,
    seed: int = 0,
    config: SessionConfig | None = None,
) -> tuple[EpisodeMetrics, Session]:
    """Play one dialogue between the policy and a freshly seeded simulated
    user; stops at END or at the turn cap."""
    config = config or SessionConfig()
    session = new_session(dataset, policy, config, seed=seed)
    user = SimulatedUser(dataset, seed=seed, params=simulator_params)

    while True:
        user_act = user.select_act(session.state.last_system_act_type)
        apply_user_act(session, user_act)
        if user_act.act_type is DialogueActType.END:
            break
        system_act = system_respond(session)
        user.observe_system_act(system_act)
        if session.terminal:  # turn cap
            break

    metrics = EpisodeMetrics(
        total_core_reward=session.total_core_reward(),
        success=user.done,
        turns=session.state.turn_count,
        seed=seed,
    )
    return metrics, session


def run_evaluation(
    dataset: ApiDataset,
    policies: list,
    n: int = 1000,
    base_seed: int = 0,
    simulator_params: SimulatorParams | None = None,
    config: SessionConfig | None = None,
) -> list[list[EpisodeMetrics]]:
    """n x k paired matrix of episode metrics: episode i uses seed
    base_seed+i under every policy."""
    if not policies:
        raise ValueError("need at least one policy")
    matrix: list[list[EpisodeMetrics]] = []
    for i in range(n):
        row = []
        for policy in policies:
            metrics, _ = run_episode(dataset, policy, simulator_params, seed=base_seed + i, config=config)
            row.append(metrics)
        matrix.append(row)
    return matrix


def mean_core_rewards(matrix: list[list[EpisodeMetrics]]) -> list[float]:
    k = len(matrix[0])
    return [float(np.mean([row[j].total_core_reward for row in matrix])) for j in range(k)]


def success_rates(matrix: list[list[EpisodeMetrics]]) -> list[float]:
    k = len(matrix[0])
    return [float(np.mean([row[j].success for row in matrix])) for j in range(k)]


# -- statistics ------------------------------------------------------------


def _regularized_gamma_p(a: float, x: float) -> float:
    """Lower regularized incomplete gamma P(a, x) via series / continued
    fraction (accurate to ~1e-14 for the ranges used here)."""
    if x < 0 or a <= 0:
        raise ValueError("invalid arguments")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        # series expansion
        term = 1.0 / a
        total = term
        n = a
        for _ in range(500):
            n += 1.0
            term *= x / n
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
        return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    # continued fraction for Q(a, x), Lentz's method
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    q = math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    return 1.0 - q


def chi_square_cdf(x: float, df: int) -> float:
    return _regularized_gamma_p(df / 2.0, x / 2.0)


def chi_square_quantile(p: float, df: int) -> float:
    """Inverse chi-square CDF: Wilson-Hilferty starting point refined by
    bisection to 1e-10."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    z = normal_quantile(p)
    guess = df * (1.0 - 2.0 / (9.0 * df) + z * math.sqrt(2.0 / (9.0 * df))) ** 3
    lo, hi = 0.0, max(guess * 2.0, df + 10.0)
    while chi_square_cdf(hi, df) < p:
        hi *= 2.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if chi_square_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return (lo + hi) / 2.0


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF via bisection on erf (1e-12)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if 0.5 * (1.0 + math.erf(mid / math.sqrt(2.0))) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return (lo + hi) / 2.0


def _within_block_ranks(row: np.ndarray) -> np.ndarray:
    """Ascending ranks with ties averaged."""
    order = np.argsort(row, kind="stable")
    ranks = np.empty(len(row))
    i = 0
    while i < len(row):
        j = i
        while j + 1 < len(row) and row[order[j + 1]] == row[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for idx in range(i, j + 1):
            ranks[order[idx]] = avg
        i = j + 1
    return ranks


def friedman_test(matrix, alpha: float = 0.05, bonferroni: bool = False) -> FriedmanResult:
    """Friedman paired test over an n x k matrix (blocks x treatments),
    plus pairwise rank-sum critical differences.

    The default critical difference is z_{1-alpha/2} * sqrt(n*k*(k+1)/6);
    ``bonferroni`` divides alpha by the number of pairwise comparisons.
    """
    data = np.asarray(matrix, dtype=float)
    if data.ndim != 2:
        raise ValueError("matrix must be two-dimensional")
    n, k = data.shape
    if n < 2 or k < 2:
        raise ValueError("need at least 2 blocks and 2 treatments")

    ranks = np.vstack([_within_block_ranks(row) for row in data])
    rank_sums = ranks.sum(axis=0)
    q = 12.0 / (n * k * (k + 1)) * float((rank_sums**2).sum()) - 3.0 * n * (k + 1)
    df = k - 1
    q_critical = chi_square_quantile(1.0 - alpha, df)
    p_value = 1.0 - chi_square_cdf(q, df)

    pairwise_alpha = alpha / (k * (k - 1) / 2.0) if bonferroni else alpha
    cd = normal_quantile(1.0 - pairwise_alpha / 2.0) * math.sqrt(n * k * (k + 1) / 6.0)
    diffs = [[abs(float(rank_sums[i] - rank_sums[j])) for j in range(k)] for i in range(k)]

    return FriedmanResult(
        q_observed=float(q),
        q_critical=float(q_critical),
        df=df,
        p_value=float(p_value),
        significant=bool(q > q_critical),
        rank_sums=[float(r) for r in rank_sums],
        pairwise_diffs=diffs,
        critical_difference=float(cd),
    )


# -- policy divergence -------------------------------------------------------


@dataclass
class PolicyComparison:
    action_order: list[str]
    confusion: np.ndarray  # [a_act, b_act] decision counts
    divergence_rate: float  # fraction of episodes with >= 1 disagreement
    episodes: int
    decisions: int

    def to_rows(self) -> list[list]:
        header = [""] + self.action_order
        rows = [header]
        for i, name in enumerate(self.action_order):
            rows.append([name] + [int(c) for c in self.confusion[i]])
        return rows


def compare_policies(
    dataset: ApiDataset,
    policy_a,
    policy_b,
    episodes: int,
    seed: int = 0,
    simulator_params: SimulatorParams | None = None,
    config: SessionConfig | None = None,
) -> PolicyComparison:
    """Drive episodes with policy_a while shadow-querying policy_b on the
    same states; tally the (a, b) decision pairs."""
    config = config or SessionConfig()
    idx = {act: i for i, act in enumerate(AGENT_ACTIONS)}
    confusion = np.zeros((len(AGENT_ACTIONS), len(AGENT_ACTIONS)), dtype=int)
    diverged_episodes = 0
    decisions = 0

    for i in range(episodes):
        session = new_session(dataset, policy_a, config, seed=seed + i)
        user = SimulatedUser(dataset, seed=seed + i, params=simulator_params)
        diverged = False
        while True:
            user_act = user.select_act(session.state.last_system_act_type)
            apply_user_act(session, user_act)
            if user_act.act_type is DialogueActType.END:
                break
            a_choice = policy_a.decide(session).act_type
            b_choice = policy_b.decide(session).act_type
            confusion[idx[a_choice], idx[b_choice]] += 1
            decisions += 1
            if a_choice is not b_choice:
                diverged = True
            system_act = system_respond(session, forced_act_type=a_choice)
            user.observe_system_act(system_act)
            if session.terminal:
                break
        if diverged:
            diverged_episodes += 1

    return PolicyComparison(
        action_order=[a.wire_name for a in AGENT_ACTIONS],
        confusion=confusion,
        divergence_rate=diverged_episodes / episodes if episodes else 0.0,
        episodes=episodes,
        decisions=decisions,
    )
