import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import stats_oracle
from apidialog.acts import DialogueAct, DialogueActType, apply_user_act, new_session
from apidialog.corpus import ApiComponent, ApiDataset, Signature, build_vectors
from apidialog.harness import (
    EpisodeMetrics,
    chi_square_cdf,
    chi_square_quantile,
    compare_policies,
    friedman_test,
    mean_core_rewards,
    normal_quantile,
    run_episode,
    run_evaluation,
    success_rates,
)
from apidialog.policies import HandCraftedPolicy, PolicyDecision, SingleTurnPolicy
from apidialog.usersim import SimulatorParams


class AlwaysSuggestDocs:
    """Recommends with full documentation except for navigation requests."""

    name = "always-sugg-info"

    def decide(self, session):
        from apidialog.acts import NAVIGATION_PAIRS

        paired = NAVIGATION_PAIRS.get(session.state.last_user_act_type)
        if paired is not None:
            return PolicyDecision(paired)
        return PolicyDecision(DialogueActType.SUGG_INFO_API)


def rich_single_component_dataset():
    comp = ApiComponent(
        id="only",
        signature=Signature(name="open_net_link", return_type="int"),
        summary="open the network link",
        properties={"description": "opens a link", "returns": "status code"},
    )
    return build_vectors(ApiDataset(api="t", components=[comp]))


class TestRunEpisode:
    def test_immediate_success_construction(self):
        """Guaranteed candidacy plus a full-documentation recommendation of a
        three-property target resolves on the first system turn."""
        ds = rich_single_component_dataset()
        params = SimulatorParams(candidate_prob_suggested=1.0)
        metrics, session = run_episode(ds, AlwaysSuggestDocs(), params, seed=8)
        assert metrics.success
        assert metrics.turns <= 3

    def test_unreachable_target_times_out_unsuccessfully(self, small_dataset):
        """With candidacy never firing, no policy can complete the search:
        the episode runs to the 25-turn cap and fails."""
        params = SimulatorParams(candidate_prob_listed=0.0, candidate_prob_suggested=0.0)
        metrics, session = run_episode(small_dataset, SingleTurnPolicy(), params, seed=8)
        assert not metrics.success
        assert metrics.turns == 25

    def test_deterministic_metrics_and_transcript(self, small_dataset):
        a_metrics, a_session = run_episode(small_dataset, HandCraftedPolicy(), seed=17)
        b_metrics, b_session = run_episode(small_dataset, HandCraftedPolicy(), seed=17)
        assert a_metrics == b_metrics
        assert [e.to_json() for e in a_session.transcript] == [e.to_json() for e in b_session.transcript]

    def test_total_reward_equals_transcript_sum(self, small_dataset):
        metrics, session = run_episode(small_dataset, SingleTurnPolicy(), seed=3)
        transcript_sum = sum(e.reward_core for e in session.transcript if e.reward_core is not None)
        assert metrics.total_core_reward == pytest.approx(transcript_sum, abs=0)

    def test_turn_cap_never_exceeded(self, small_dataset):
        for seed in range(20):
            metrics, _ = run_episode(small_dataset, SingleTurnPolicy(), seed=seed)
            assert metrics.turns <= 25


class TestRunEvaluation:
    def test_single_policy_column(self, toy_dataset):
        matrix = run_evaluation(toy_dataset, [SingleTurnPolicy()], n=5, base_seed=0)
        assert len(matrix) == 5
        assert all(len(row) == 1 for row in matrix)

    def test_identical_policies_identical_columns(self, small_dataset):
        matrix = run_evaluation(
            small_dataset, [HandCraftedPolicy(), HandCraftedPolicy()], n=30, base_seed=50
        )
        for row in matrix:
            assert row[0] == row[1]

    def test_paired_seeds(self, small_dataset):
        matrix = run_evaluation(small_dataset, [SingleTurnPolicy()], n=4, base_seed=9)
        assert [row[0].seed for row in matrix] == [9, 10, 11, 12]

    def test_direction_hand_crafted_beats_single_turn(self, eval_dataset):
        matrix = run_evaluation(
            eval_dataset, [SingleTurnPolicy(), HandCraftedPolicy()], n=50, base_seed=400
        )
        single, hand = mean_core_rewards(matrix)
        assert hand > single

    def test_success_rates_shape(self, toy_dataset):
        matrix = run_evaluation(toy_dataset, [SingleTurnPolicy(), HandCraftedPolicy()], n=5, base_seed=2)
        rates = success_rates(matrix)
        assert len(rates) == 2
        assert all(0.0 <= r <= 1.0 for r in rates)


class TestFriedman:
    def test_identical_rank_blocks(self):
        matrix = [[1.0, 2.0, 3.0]] * 10
        result = friedman_test(matrix)
        assert result.q_observed == pytest.approx(20.0)
        assert result.df == 2
        assert result.significant

    def test_reference_constants_at_evaluation_scale(self):
        assert chi_square_quantile(0.95, 2) == pytest.approx(5.991, abs=1e-3)
        cd = normal_quantile(0.975) * math.sqrt(1000 * 3 * 4 / 6)
        assert cd == pytest.approx(87.652, abs=0.01)

    def test_matches_naive_oracle_on_random_matrix(self):
        rng = np.random.default_rng(0)
        matrix = rng.normal(size=(50, 3))
        result = friedman_test(matrix)
        q_expected, sums_expected = stats_oracle.friedman_q(matrix.tolist())
        assert result.q_observed == pytest.approx(q_expected, abs=1e-9)
        assert result.rank_sums == pytest.approx(sums_expected)

    def test_matches_oracle_with_ties(self):
        rng = np.random.default_rng(4)
        matrix = rng.integers(0, 3, size=(40, 4)).astype(float)
        result = friedman_test(matrix)
        q_expected, sums_expected = stats_oracle.friedman_q(matrix.tolist())
        assert result.q_observed == pytest.approx(q_expected, abs=1e-9)

    def test_matches_scipy(self):
        st_mod = pytest.importorskip("scipy.stats")
        rng = np.random.default_rng(7)
        matrix = rng.normal(size=(60, 3))
        result = friedman_test(matrix)
        expected = st_mod.friedmanchisquare(matrix[:, 0], matrix[:, 1], matrix[:, 2])
        assert result.q_observed == pytest.approx(expected.statistic, abs=1e-9)
        assert result.p_value == pytest.approx(expected.pvalue, abs=1e-9)

    def test_rank_sums_total_invariant(self):
        rng = np.random.default_rng(1)
        matrix = rng.normal(size=(25, 4))
        result = friedman_test(matrix)
        n, k = 25, 4
        assert sum(result.rank_sums) == pytest.approx(n * k * (k + 1) / 2)

    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=20, deadline=None)
    def test_invariant_under_monotone_transform(self, seed):
        rng = np.random.default_rng(seed)
        matrix = rng.normal(size=(12, 3))
        base = friedman_test(matrix)
        transformed = friedman_test(np.exp(matrix) * 3.0 + 7.0)
        assert transformed.q_observed == pytest.approx(base.q_observed)
        assert transformed.rank_sums == pytest.approx(base.rank_sums)

    def test_degenerate_inputs_rejected(self):
        with pytest.raises(ValueError):
            friedman_test([[1.0, 2.0]])
        with pytest.raises(ValueError):
            friedman_test([[1.0], [2.0]])

    def test_bonferroni_widens_critical_difference(self):
        rng = np.random.default_rng(2)
        matrix = rng.normal(size=(30, 3))
        plain = friedman_test(matrix)
        corrected = friedman_test(matrix, bonferroni=True)
        assert corrected.critical_difference > plain.critical_difference

    def test_cdf_quantile_round_trip(self):
        for df in (1, 2, 5, 10):
            for p in (0.5, 0.9, 0.95, 0.99):
                q = chi_square_quantile(p, df)
                assert chi_square_cdf(q, df) == pytest.approx(p, abs=1e-9)


class TestComparePolicies:
    def test_policy_against_itself_is_diagonal(self, small_dataset):
        comparison = compare_policies(small_dataset, SingleTurnPolicy(), SingleTurnPolicy(), episodes=10, seed=5)
        off_diagonal = comparison.confusion.sum() - np.trace(comparison.confusion)
        assert off_diagonal == 0
        assert comparison.divergence_rate == 0.0

    def test_low_score_query_divergence_cell(self, toy_dataset):
        """After a query no component matches, single-turn lists results
        while hand-crafted requests a new query."""
        session = new_session(toy_dataset, SingleTurnPolicy(), seed=1)
        apply_user_act(session, DialogueAct(DialogueActType.PROVIDE_QUERY, "zzz qqq www"))
        assert session.state.top_score() < 0.05
        st_choice = SingleTurnPolicy().decide(session).act_type
        hc_choice = HandCraftedPolicy().decide(session).act_type
        assert st_choice is DialogueActType.LIST_RESULTS
        assert hc_choice is DialogueActType.REQUEST_QUERY

    def test_counts_consistent(self, small_dataset):
        comparison = compare_policies(small_dataset, HandCraftedPolicy(), SingleTurnPolicy(), episodes=12, seed=31)
        assert comparison.confusion.sum() == comparison.decisions
        assert 0.0 <= comparison.divergence_rate <= 1.0
        assert comparison.episodes == 12

    def test_rows_are_policy_a_actions(self, small_dataset):
        comparison = compare_policies(small_dataset, SingleTurnPolicy(), HandCraftedPolicy(), episodes=8, seed=3)
        # single-turn never chooses requestQuery / suggKeywords / suggInfoAPI spontaneously
        names = comparison.action_order
        for forbidden in ("requestQuery", "suggKeywords"):
            assert comparison.confusion[names.index(forbidden)].sum() == 0
