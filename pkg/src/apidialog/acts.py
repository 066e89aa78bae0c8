"""Dialogue action space, typed acts, state tracking, and the session loop
that wires user acts to retrieval updates and policy responses."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Protocol

from apidialog.corpus import (
    ApiDataset,
    ExhaustedResultsError,
    RankedResults,
    SearchCriteria,
    page,
    next_suggestion,
    recommend_keywords,
    score_and_rank,
)

logger = logging.getLogger(__name__)


class ContractViolationError(Exception):
    """An act was used where the session contract forbids it."""


class UnknownComponentError(Exception):
    """An act payload referenced a component id not in the dataset."""


class DialogueActType(str, Enum):
    # system acts
    START = "START"
    REQUEST_QUERY = "requestQuery"
    SUGG_KEYWORDS = "suggKeywords"
    SUGG_API = "suggAPI"
    SUGG_INFO_API = "suggInfoAPI"
    INFO_API = "infoAPI"
    INFO_ALL_API = "infoAllAPI"
    LIST_RESULTS = "listResults"
    CHANGE_PAGE = "changePage"
    # user acts
    PROVIDE_QUERY = "provideQuery"
    PROVIDE_KEYWORD = "provideKeyword"
    REJECT_KEYWORDS = "rejectKeywords"
    REJECT_COMPONENTS = "rejectComponents"
    UNSURE = "unsure"
    ELICIT_INFO_API = "elicitInfoAPI"
    ELICIT_INFO_ALL_API = "elicitInfoAllAPI"
    ELICIT_SUGG_API = "elicitSuggAPI"
    ELICIT_LIST_RESULTS = "elicitListResults"
    # The user-side page request shares the wire name "changePage" with the
    # system response; the enum keeps them distinct.
    USER_CHANGE_PAGE = "changePage(user)"
    RESTART = "restart"
    END = "END"

    @property
    def wire_name(self) -> str:
        if self is DialogueActType.USER_CHANGE_PAGE:
            return "changePage"
        return self.value

    @property
    def is_user_act(self) -> bool:
        return self in USER_ACTS

    @property
    def is_system_act(self) -> bool:
        return self in SYSTEM_ACTS


SYSTEM_ACTS = frozenset(
    {
        DialogueActType.START,
        DialogueActType.REQUEST_QUERY,
        DialogueActType.SUGG_KEYWORDS,
        DialogueActType.SUGG_API,
        DialogueActType.SUGG_INFO_API,
        DialogueActType.INFO_API,
        DialogueActType.INFO_ALL_API,
        DialogueActType.LIST_RESULTS,
        DialogueActType.CHANGE_PAGE,
    }
)

USER_ACTS = frozenset(
    {
        DialogueActType.PROVIDE_QUERY,
        DialogueActType.PROVIDE_KEYWORD,
        DialogueActType.REJECT_KEYWORDS,
        DialogueActType.REJECT_COMPONENTS,
        DialogueActType.UNSURE,
        DialogueActType.ELICIT_INFO_API,
        DialogueActType.ELICIT_INFO_ALL_API,
        DialogueActType.ELICIT_SUGG_API,
        DialogueActType.ELICIT_LIST_RESULTS,
        DialogueActType.USER_CHANGE_PAGE,
        DialogueActType.RESTART,
        DialogueActType.END,
    }
)

# The action set a policy may select from, in the canonical index order used
# by the learned policy's output layer.
AGENT_ACTIONS: tuple[DialogueActType, ...] = (
    DialogueActType.REQUEST_QUERY,
    DialogueActType.SUGG_KEYWORDS,
    DialogueActType.SUGG_API,
    DialogueActType.SUGG_INFO_API,
    DialogueActType.INFO_API,
    DialogueActType.INFO_ALL_API,
    DialogueActType.LIST_RESULTS,
    DialogueActType.CHANGE_PAGE,
)

# Standard navigation: each user request act is answered by exactly one
# system act.
NAVIGATION_PAIRS: dict[DialogueActType, DialogueActType] = {
    DialogueActType.ELICIT_INFO_API: DialogueActType.INFO_API,
    DialogueActType.ELICIT_INFO_ALL_API: DialogueActType.INFO_ALL_API,
    DialogueActType.ELICIT_SUGG_API: DialogueActType.SUGG_API,
    DialogueActType.ELICIT_LIST_RESULTS: DialogueActType.LIST_RESULTS,
    DialogueActType.USER_CHANGE_PAGE: DialogueActType.CHANGE_PAGE,
}

# Which user acts modify the search and therefore trigger a re-rank.
SEARCH_MODIFYING_ACTS = frozenset(
    {
        DialogueActType.PROVIDE_QUERY,
        DialogueActType.PROVIDE_KEYWORD,
        DialogueActType.REJECT_COMPONENTS,
    }
)


def act_type_from_wire(name: str, actor: str) -> DialogueActType:
    """Resolve a wire-format act name, disambiguating changePage by actor."""
    if name == "changePage":
        return DialogueActType.USER_CHANGE_PAGE if actor == "user" else DialogueActType.CHANGE_PAGE
    return DialogueActType(name)


@dataclass
class DialogueAct:
    """A typed act plus its payload.

    Payload shapes by act type: provideQuery -> query string;
    provideKeyword -> keyword string; rejectKeywords -> list of keywords;
    rejectComponents / listResults / changePage -> list of component ids;
    suggAPI / suggInfoAPI / elicitInfoAllAPI / infoAllAPI -> component id;
    elicitInfoAPI / infoAPI -> {"id", "properties"}; suggKeywords -> list of
    keywords; everything else -> None.
    """

    act_type: DialogueActType
    payload: Any = None

    def to_wire(self) -> dict:
        return {"act_type": self.act_type.wire_name, "payload": self.payload}


def _payload_component_ids(act: DialogueAct) -> list[str]:
    """Component ids named anywhere in the act payload."""
    t, p = act.act_type, act.payload
    if t in (
        DialogueActType.REJECT_COMPONENTS,
        DialogueActType.LIST_RESULTS,
        DialogueActType.CHANGE_PAGE,
    ):
        return list(p or [])
    if t in (
        DialogueActType.SUGG_API,
        DialogueActType.SUGG_INFO_API,
        DialogueActType.ELICIT_INFO_ALL_API,
        DialogueActType.INFO_ALL_API,
    ):
        return [p] if p else []
    if t in (DialogueActType.ELICIT_INFO_API, DialogueActType.INFO_API):
        return [p["id"]] if p else []
    return []


def validate_user_act(act: DialogueAct, dataset: ApiDataset):
    t, p = act.act_type, act.payload
    if not t.is_user_act:
        raise ContractViolationError(f"{t.wire_name} is not a user act")
    if t is DialogueActType.PROVIDE_QUERY and not (isinstance(p, str) and p.strip()):
        raise ContractViolationError("provideQuery needs a non-empty query string")
    if t is DialogueActType.PROVIDE_KEYWORD and not (isinstance(p, str) and p.strip()):
        raise ContractViolationError("provideKeyword needs a non-empty keyword")
    if t is DialogueActType.REJECT_KEYWORDS and not (isinstance(p, list) and p):
        raise ContractViolationError("rejectKeywords needs a list of keywords")
    if t is DialogueActType.REJECT_COMPONENTS and not isinstance(p, list):
        raise ContractViolationError("rejectComponents needs a list of component ids")
    if t is DialogueActType.ELICIT_INFO_API:
        if not (isinstance(p, dict) and p.get("id") and p.get("properties")):
            raise ContractViolationError("elicitInfoAPI needs {id, properties}")
    if t is DialogueActType.ELICIT_INFO_ALL_API and not isinstance(p, str):
        raise ContractViolationError("elicitInfoAllAPI needs a component id")
    for cid in _payload_component_ids(act):
        if cid not in dataset:
            raise UnknownComponentError(f"unknown component id {cid!r}")
    if t is DialogueActType.ELICIT_INFO_API:
        comp = dataset.get(p["id"])
        known = set(comp.property_names())
        for prop in p["properties"]:
            if prop not in known:
                raise UnknownComponentError(f"component {p['id']!r} has no property {prop!r}")


@dataclass
class SessionConfig:
    page_size: int = 6       # components per listResults/changePage
    keyword_count: int = 6   # keywords per suggKeywords
    max_turns: int = 25

    def validate(self):
        if self.page_size < 1 or self.keyword_count < 1 or self.max_turns < 1:
            raise ValueError("page_size, keyword_count, and max_turns must all be >= 1")


@dataclass
class DialogueState:
    criteria: SearchCriteria
    results: RankedResults
    last_system_act_type: DialogueActType = DialogueActType.START
    last_user_act_type: DialogueActType | None = None
    turn_count: int = 0
    unsure_recency: float = math.inf  # user turns since the last unsure

    def top_score(self) -> float:
        return self.results.top_score()


@dataclass
class TranscriptEntry:
    actor: str  # "user" | "system"
    act: DialogueAct
    turn: int
    top_score: float
    result_index: int
    reward_core: float | None = None
    reward_training: float | None = None

    def to_json(self) -> str:
        record = {
            "actor": self.actor,
            "act_type": self.act.act_type.wire_name,
            "payload": self.act.payload,
            "turn": self.turn,
            "top_score": self.top_score,
            "r": self.result_index,
        }
        if self.reward_core is not None:
            record["reward_core"] = self.reward_core
        if self.reward_training is not None:
            record["reward_training"] = self.reward_training
        return json.dumps(record)


class Policy(Protocol):
    name: str

    def decide(self, session: "Session") -> "Any": ...


@dataclass
class Session:
    dataset: ApiDataset
    policy: Any
    config: SessionConfig
    seed: int
    state: DialogueState = field(init=False)
    transcript: list[TranscriptEntry] = field(default_factory=list)
    terminal: bool = False
    _rescore_count: int = field(default=0, repr=False)
    _user_act_pending: bool = field(default=False, repr=False)

    def __post_init__(self):
        self.config.validate()
        criteria = SearchCriteria()
        results = score_and_rank(self.dataset, criteria, self._next_tie_seed())
        self.state = DialogueState(criteria=criteria, results=results)
        self._log("system", DialogueAct(DialogueActType.START))

    def _next_tie_seed(self) -> int:
        # Stable per (session seed, rescore ordinal): replaying the same user
        # acts reproduces every ranking bitwise.
        seed = (self.seed * 1_000_003 + self._rescore_count) % (2**63)
        self._rescore_count += 1
        return seed

    def _rescore(self):
        self.state.results = score_and_rank(self.dataset, self.state.criteria, self._next_tie_seed())

    def _log(self, actor: str, act: DialogueAct, turn: int | None = None, reward_core: float | None = None):
        entry = TranscriptEntry(
            actor=actor,
            act=act,
            turn=self.state.turn_count if turn is None else turn,
            top_score=self.state.results.top_score(),
            result_index=self.state.results.result_index,
            reward_core=reward_core,
        )
        self.transcript.append(entry)
        return entry

    def total_core_reward(self) -> float:
        return sum(e.reward_core for e in self.transcript if e.reward_core is not None)


def new_session(dataset: ApiDataset, policy, config: SessionConfig | None = None, seed: int = 0) -> Session:
    return Session(dataset=dataset, policy=policy, config=config or SessionConfig(), seed=seed)


def apply_user_act(session: Session, act: DialogueAct) -> DialogueState:
    """Fold a user act into the dialogue state.

    Search-modifying acts re-rank and reset the cursor; restart clears the
    criteria but keeps the turn count; END makes the session terminal.
    """
    if session.terminal:
        raise ContractViolationError("session is terminal")
    validate_user_act(act, session.dataset)
    state = session.state
    t = act.act_type

    state.last_user_act_type = t
    if t is DialogueActType.UNSURE:
        state.unsure_recency = 0
    elif state.unsure_recency != math.inf:
        state.unsure_recency += 1

    crit = state.criteria
    if t is DialogueActType.PROVIDE_QUERY:
        crit.query = act.payload
    elif t is DialogueActType.PROVIDE_KEYWORD:
        kw = act.payload
        crit.rejected_keywords.discard(kw)
        crit.provided_keywords.add(kw)
    elif t is DialogueActType.REJECT_KEYWORDS:
        for kw in act.payload:
            crit.provided_keywords.discard(kw)
            crit.rejected_keywords.add(kw)
    elif t is DialogueActType.REJECT_COMPONENTS:
        crit.rejected_components.update(act.payload)
    elif t is DialogueActType.RESTART:
        state.criteria = SearchCriteria()
        state.unsure_recency = math.inf
        session._rescore()
    elif t is DialogueActType.END:
        session.terminal = True

    if t in SEARCH_MODIFYING_ACTS:
        session._rescore()

    session._log("user", act, turn=state.turn_count + 1)
    session._user_act_pending = True
    return state


def _fill_payload(session: Session, act_type: DialogueActType) -> DialogueAct:
    """Attach the knowledge-layer payload for a chosen system act type.

    Unfulfillable choices (suggestion cursor exhausted) fall back to
    listResults.
    """
    state = session.state
    results = state.results
    dataset = session.dataset
    cfg = session.config

    if act_type is DialogueActType.LIST_RESULTS:
        results.result_index = 0
        return DialogueAct(act_type, page(results, cfg.page_size))
    if act_type is DialogueActType.CHANGE_PAGE:
        return DialogueAct(act_type, page(results, cfg.page_size))
    if act_type in (DialogueActType.SUGG_API, DialogueActType.SUGG_INFO_API):
        try:
            return DialogueAct(act_type, next_suggestion(results))
        except ExhaustedResultsError:
            logger.info("suggestion cursor exhausted; substituting listResults")
            results.result_index = 0
            return DialogueAct(DialogueActType.LIST_RESULTS, page(results, cfg.page_size))
    if act_type is DialogueActType.INFO_API:
        last = session.transcript[-1]
        if last.actor == "user" and last.act.act_type is DialogueActType.ELICIT_INFO_API:
            return DialogueAct(act_type, dict(last.act.payload))
        return DialogueAct(act_type, {"id": results.ranking[0], "properties": ["summary"]})
    if act_type is DialogueActType.INFO_ALL_API:
        last = session.transcript[-1]
        if last.actor == "user" and last.act.act_type is DialogueActType.ELICIT_INFO_ALL_API:
            cid = last.act.payload
        else:
            cid = results.ranking[0]
        return DialogueAct(act_type, cid)
    if act_type is DialogueActType.SUGG_KEYWORDS:
        return DialogueAct(act_type, recommend_keywords(dataset, results, state.criteria, cfg.keyword_count))
    if act_type is DialogueActType.REQUEST_QUERY:
        return DialogueAct(act_type)
    raise ContractViolationError(f"{act_type.wire_name} is not a selectable system act")


def system_respond(session: Session, forced_act_type: DialogueActType | None = None) -> DialogueAct:
    """Pick the next system act (via the policy unless forced), fill its
    payload, advance the turn, and record the core reward."""
    from apidialog.rewards import RewardConfig, TurnContext, core_reward

    if session.terminal:
        raise ContractViolationError("session is terminal")
    if not session._user_act_pending:
        raise ContractViolationError("no user act to respond to")

    if forced_act_type is None:
        decision = session.policy.decide(session)
        act_type = getattr(decision, "act_type", decision)
    else:
        act_type = forced_act_type
    if act_type not in AGENT_ACTIONS:
        raise ContractViolationError(f"policy chose non-selectable act {act_type!r}")

    act = _fill_payload(session, act_type)
    state = session.state
    reward = core_reward(
        TurnContext(system_act_type=act.act_type, preceding_user_act_type=state.last_user_act_type),
        RewardConfig(),
    )
    state.turn_count += 1
    state.last_system_act_type = act.act_type
    session._user_act_pending = False
    session._log("system", act, reward_core=reward)
    if state.turn_count >= session.config.max_turns:
        session.terminal = True
    return act


def replay_transcript(dataset: ApiDataset, policy, config: SessionConfig, seed: int, user_acts: list[DialogueAct]) -> Session:
    """Re-run a session from its recorded user acts; with the same seed,
    policy, and config this reproduces the system acts exactly."""
    session = new_session(dataset, policy, config, seed)
    for act in user_acts:
        apply_user_act(session, act)
        if act.act_type is DialogueActType.END or session.terminal:
            break
        system_respond(session)
    return session
