import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apidialog.acts import NAVIGATION_PAIRS, DialogueActType, DialogueState
from apidialog.corpus import RankedResults, SearchCriteria
from apidialog.policies import (
    DEFAULT_GRID,
    HandCraftedConfig,
    HandCraftedPolicy,
    SingleTurnPolicy,
    grid_cells,
    grid_search,
    hand_crafted_decide,
    single_turn_decide,
)
from apidialog.usersim import SimulatorParams

import numpy as np

CONFIDENCE_ORDER = [
    DialogueActType.REQUEST_QUERY,
    DialogueActType.SUGG_KEYWORDS,
    DialogueActType.LIST_RESULTS,
    DialogueActType.SUGG_API,
    DialogueActType.SUGG_INFO_API,
]


def state_with(top_score=0.5, last_user=DialogueActType.PROVIDE_QUERY, unsure_recency=math.inf):
    results = RankedResults(scores=np.array([top_score, top_score / 2]), ranking=["a", "b"])
    return DialogueState(
        criteria=SearchCriteria(),
        results=results,
        last_user_act_type=last_user,
        unsure_recency=unsure_recency,
    )


class TestSingleTurn:
    def test_query_gets_list(self):
        assert single_turn_decide(state_with(last_user=DialogueActType.PROVIDE_QUERY)).act_type is DialogueActType.LIST_RESULTS

    def test_navigation_answered(self):
        assert single_turn_decide(state_with(last_user=DialogueActType.ELICIT_SUGG_API)).act_type is DialogueActType.SUGG_API

    def test_everything_else_gets_list(self):
        for act in (DialogueActType.UNSURE, DialogueActType.REJECT_KEYWORDS, DialogueActType.RESTART):
            assert single_turn_decide(state_with(last_user=act)).act_type is DialogueActType.LIST_RESULTS

    def test_output_always_navigation_or_list(self):
        for user_act in DialogueActType:
            if not user_act.is_user_act:
                continue
            got = single_turn_decide(state_with(last_user=user_act)).act_type
            assert got in set(NAVIGATION_PAIRS.values()) | {DialogueActType.LIST_RESULTS}


class TestHandCrafted:
    def test_mid_confidence_band_suggests_function(self):
        cfg = HandCraftedConfig()
        got = hand_crafted_decide(state_with(top_score=0.206), cfg)
        assert got.act_type is DialogueActType.SUGG_API

    def test_high_confidence_band_suggests_with_docs(self):
        cfg = HandCraftedConfig()
        got = hand_crafted_decide(state_with(top_score=0.597), cfg)
        assert got.act_type is DialogueActType.SUGG_INFO_API

    def test_navigation_beats_thresholds(self):
        cfg = HandCraftedConfig()
        got = hand_crafted_decide(state_with(top_score=0.9, last_user=DialogueActType.ELICIT_INFO_ALL_API), cfg)
        assert got.act_type is DialogueActType.INFO_ALL_API

    def test_unsure_gets_list(self):
        cfg = HandCraftedConfig()
        got = hand_crafted_decide(state_with(top_score=0.01, last_user=DialogueActType.UNSURE), cfg)
        assert got.act_type is DialogueActType.LIST_RESULTS

    def test_low_score_requests_query(self):
        cfg = HandCraftedConfig()
        assert hand_crafted_decide(state_with(top_score=0.01), cfg).act_type is DialogueActType.REQUEST_QUERY

    def test_mid_low_score_suggests_keywords(self):
        cfg = HandCraftedConfig()
        assert hand_crafted_decide(state_with(top_score=0.07), cfg).act_type is DialogueActType.SUGG_KEYWORDS

    def test_refinement_suppressed_in_unsure_window(self):
        cfg = HandCraftedConfig()
        got = hand_crafted_decide(state_with(top_score=0.01, unsure_recency=1), cfg)
        assert got.act_type is DialogueActType.LIST_RESULTS
        got = hand_crafted_decide(state_with(top_score=0.01, unsure_recency=3), cfg)
        assert got.act_type is DialogueActType.REQUEST_QUERY

    def test_refinement_never_emitted_within_window(self):
        cfg = HandCraftedConfig(unsure_window=3)
        for recency in (0, 1, 2):
            for score in (0.0, 0.04, 0.09, 0.3, 0.9):
                got = hand_crafted_decide(state_with(top_score=score, unsure_recency=recency), cfg)
                assert got.act_type not in (DialogueActType.REQUEST_QUERY, DialogueActType.SUGG_KEYWORDS)

    @given(
        low=st.floats(min_value=0.0, max_value=1.0),
        high=st.floats(min_value=0.0, max_value=1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotone_in_score(self, low, high):
        """Raising the score never moves the decision down the confidence
        order for non-navigation, non-unsure turns."""
        if low > high:
            low, high = high, low
        cfg = HandCraftedConfig()
        a = hand_crafted_decide(state_with(top_score=low), cfg).act_type
        b = hand_crafted_decide(state_with(top_score=high), cfg).act_type
        assert CONFIDENCE_ORDER.index(a) <= CONFIDENCE_ORDER.index(b)

    def test_pure_function_of_inputs(self):
        cfg = HandCraftedConfig()
        s = state_with(top_score=0.42)
        assert hand_crafted_decide(s, cfg) == hand_crafted_decide(s, cfg)

    def test_threshold_ordering_enforced(self):
        with pytest.raises(ValueError):
            HandCraftedConfig(t_query=0.5, t_keywords=0.1)


class TestGridSearch:
    def test_single_cell_grid_returns_it(self, toy_dataset):
        grid = {"t_query": [0.05], "t_keywords": [0.1], "t_sugg": [0.2], "t_info": [0.5]}
        result = grid_search(grid, toy_dataset, SimulatorParams(), episodes_per_cell=2, seed=5)
        assert result.best == HandCraftedConfig(0.05, 0.1, 0.2, 0.5)
        assert len(result.cells) == 1
        assert result.cells[0]["mean_core_reward"] == pytest.approx(result.best_mean_core_reward)

    def test_empty_grid_rejected(self, toy_dataset):
        grid = {"t_query": [0.9], "t_keywords": [0.1], "t_sugg": [0.2], "t_info": [0.5]}
        with pytest.raises(ValueError, match="no cells"):
            grid_search(grid, toy_dataset, SimulatorParams(), episodes_per_cell=1, seed=5)

    def test_cells_respect_ordering(self):
        for cfg in grid_cells(DEFAULT_GRID):
            assert cfg.t_query <= cfg.t_keywords <= cfg.t_sugg <= cfg.t_info

    def test_reproducible(self, toy_dataset):
        grid = {"t_query": [0.0, 0.05], "t_keywords": [0.1], "t_sugg": [0.2], "t_info": [0.5]}
        a = grid_search(grid, toy_dataset, SimulatorParams(), episodes_per_cell=3, seed=9)
        b = grid_search(grid, toy_dataset, SimulatorParams(), episodes_per_cell=3, seed=9)
        assert a.best == b.best
        assert a.best_mean_core_reward == b.best_mean_core_reward
        assert a.cells == b.cells

    def test_default_grid_winner_consistent_with_shipped_thresholds(self, eval_dataset):
        """The full default grid's winner must leave 0.206 in the suggAPI
        band and 0.597 in the suggInfoAPI band."""
        result = grid_search(DEFAULT_GRID, eval_dataset, SimulatorParams(), episodes_per_cell=4, seed=100)
        best = result.best
        assert best.t_sugg <= 0.206 < best.t_info <= 0.597
        policy_state_mid = state_with(top_score=0.206)
        policy_state_high = state_with(top_score=0.597)
        assert hand_crafted_decide(policy_state_mid, best).act_type is DialogueActType.SUGG_API
        assert hand_crafted_decide(policy_state_high, best).act_type is DialogueActType.SUGG_INFO_API
