"""Agenda-based simulated user.

Each episode the simulator draws a hidden target function, queries for it
with a tunable error rate, keeps a candidate list with per-function evidence,
and picks its next act from a bigram table conditioned on the last system
act. All behavior parameters live in :class:`SimulatorParams` so experiment
outputs can record them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from apidialog.acts import DialogueAct, DialogueActType
from apidialog.corpus import ApiDataset

# Bigram rows: P(next user act | last system act). Rows are renormalized over
# the acts actually available in context, so they only need relative weights.
DEFAULT_BIGRAM: dict[str, dict[str, float]] = {
    "START": {"provideQuery": 0.9, "provideKeyword": 0.1},
    "requestQuery": {"provideQuery": 0.8, "provideKeyword": 0.2},
    "suggKeywords": {"provideKeyword": 0.6, "rejectKeywords": 0.3, "provideQuery": 0.1},
    "listResults": {
        "elicitInfoAPI": 0.35,
        "provideKeyword": 0.20,
        "provideQuery": 0.15,
        "changePage": 0.15,
        "rejectComponents": 0.10,
        "elicitSuggAPI": 0.05,
    },
    "changePage": {
        "elicitInfoAPI": 0.30,
        "changePage": 0.25,
        "provideQuery": 0.15,
        "provideKeyword": 0.15,
        "rejectComponents": 0.10,
        "elicitSuggAPI": 0.05,
    },
    "suggAPI": {
        "elicitInfoAllAPI": 0.35,
        "elicitSuggAPI": 0.20,
        "rejectComponents": 0.20,
        "provideKeyword": 0.15,
        "provideQuery": 0.10,
    },
    "suggInfoAPI": {
        "elicitSuggAPI": 0.25,
        "rejectComponents": 0.25,
        "elicitListResults": 0.20,
        "provideQuery": 0.15,
        "provideKeyword": 0.15,
    },
    "infoAPI": {
        "elicitInfoAPI": 0.30,
        "elicitListResults": 0.20,
        "elicitSuggAPI": 0.15,
        "provideQuery": 0.15,
        "provideKeyword": 0.10,
        "rejectComponents": 0.10,
    },
    "infoAllAPI": {
        "elicitListResults": 0.25,
        "elicitSuggAPI": 0.20,
        "provideQuery": 0.20,
        "rejectComponents": 0.20,
        "provideKeyword": 0.15,
    },
}


@dataclass
class SimulatorParams:
    query_error_min: float = 0.1
    query_error_max: float = 0.5
    query_error_decay: float = 0.05      # drop after resolving a non-target
    candidate_prob_listed: float = 0.4
    candidate_prob_suggested: float = 0.8
    evidence_threshold: int = 3
    full_doc_evidence_cap: int = 3       # infoAllAPI/suggInfoAPI give min(cap, #properties)
    expressiveness_min: float = 0.5
    expressiveness_max: float = 1.0
    expressiveness_query_cost: float = 0.25
    expressiveness_keyword_cost: float = 0.10
    expressiveness_gain: float = 0.05    # per function or property exposure
    query_threshold: float = 0.20        # below this a query attempt becomes unsure
    keyword_threshold: float = 0.10
    query_length_min: int = 2
    query_length_max: int = 5
    bigram: dict[str, dict[str, float]] = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_BIGRAM)))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimulatorParams":
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SimulatorParams":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


class SimulatedUser:
    """Hidden-target user with candidate/evidence bookkeeping.

    ``query_error`` mixes uniform noise into query term selection;
    ``expressiveness`` gates the ability to produce queries/keywords and is
    replenished by exposure to functions and documentation.
    """

    def __init__(self, dataset: ApiDataset, seed: int, params: SimulatorParams | None = None):
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        self.dataset = dataset
        self.params = params or SimulatorParams()
        self.rng = np.random.default_rng(seed)
        p = self.params

        self.target_id: str = dataset.components[int(self.rng.integers(0, len(dataset)))].id
        self.query_error: float = float(self.rng.uniform(p.query_error_min, p.query_error_max))
        self.expressiveness: float = float(self.rng.uniform(p.expressiveness_min, p.expressiveness_max))
        self.candidates: dict[str, int] = {}
        self.resolved_pool: set[str] = set()
        self.done: bool = False
        self.ended: bool = False
        self._rejected_sent: set[str] = set()
        self._last_suggested_keywords: list[str] = []

    # -- internal dynamics ------------------------------------------------

    def _gain_expressiveness(self, exposures: int):
        self.expressiveness = min(1.0, self.expressiveness + exposures * self.params.expressiveness_gain)

    def _roll_candidate(self, component_id: str, prob: float):
        if component_id in self.resolved_pool or component_id in self.candidates:
            return
        if self.rng.random() < prob:
            self.candidates[component_id] = 0

    def _add_evidence(self, component_id: str, amount: int):
        if component_id in self.candidates:
            self.candidates[component_id] += amount

    def _property_count(self, component_id: str) -> int:
        # summary counts as one property
        return 1 + len(self.dataset.get(component_id).properties)

    def _resolve_saturated(self):
        for cid, evidence in list(self.candidates.items()):
            if evidence >= self.params.evidence_threshold:
                del self.candidates[cid]
                if cid == self.target_id:
                    self.done = True
                else:
                    self.resolved_pool.add(cid)
                    self.query_error = max(0.0, self.query_error - self.params.query_error_decay)

    # -- observable surface ------------------------------------------------

    def observe_system_act(self, act: DialogueAct):
        """Update candidacy, evidence, and expressiveness for one system act."""
        p = self.params
        t = act.act_type
        if not t.is_system_act:
            raise ValueError(f"{t} is not a system act")

        if t in (DialogueActType.LIST_RESULTS, DialogueActType.CHANGE_PAGE):
            for cid in act.payload or []:
                self._roll_candidate(cid, p.candidate_prob_listed)
            self._gain_expressiveness(len(act.payload or []))
        elif t is DialogueActType.SUGG_API:
            cid = act.payload
            self._roll_candidate(cid, p.candidate_prob_suggested)
            self._add_evidence(cid, 1)  # summary shown
            self._gain_expressiveness(2)  # the function and its summary
        elif t is DialogueActType.SUGG_INFO_API:
            cid = act.payload
            self._roll_candidate(cid, p.candidate_prob_suggested)
            shown = min(p.full_doc_evidence_cap, self._property_count(cid))
            self._add_evidence(cid, shown)
            self._gain_expressiveness(1 + shown)
        elif t is DialogueActType.INFO_API:
            cid = act.payload["id"]
            shown = len(act.payload["properties"])
            self._add_evidence(cid, shown)
            self._gain_expressiveness(shown)
        elif t is DialogueActType.INFO_ALL_API:
            cid = act.payload
            shown = min(p.full_doc_evidence_cap, self._property_count(cid))
            self._add_evidence(cid, shown)
            self._gain_expressiveness(shown)
        elif t is DialogueActType.SUGG_KEYWORDS:
            self._last_suggested_keywords = list(act.payload or [])

        self._resolve_saturated()

    def generate_query(self, length: int | None = None) -> str:
        """Sample query terms from the target's vector mixed with uniform
        vocabulary noise weighted by the query-error parameter."""
        p = self.params
        vocab_size = len(self.dataset.vocabulary)
        target_vec = self.dataset.vector_of(self.target_id)
        weights = (1.0 - self.query_error) * target_vec + self.query_error / vocab_size
        total = weights.sum()
        if total <= 0:
            weights = np.full(vocab_size, 1.0 / vocab_size)
        else:
            weights = weights / total

        if length is None:
            length = int(self.rng.integers(p.query_length_min, p.query_length_max + 1))
        length = min(length, int(np.count_nonzero(weights)))
        picks = self.rng.choice(vocab_size, size=length, replace=False, p=weights)
        terms = [t for t, _ in sorted(self.dataset.vocabulary.items(), key=lambda kv: kv[1])]
        return " ".join(terms[i] for i in picks)

    def _best_candidate(self) -> str:
        best_id, best_evidence = None, -1
        for cid, ev in self.candidates.items():
            if ev > best_evidence:
                best_id, best_evidence = cid, ev
        return best_id

    def _available_acts(self, last_system_act: DialogueActType) -> list[str]:
        acts = ["provideQuery", "provideKeyword", "elicitSuggAPI", "elicitListResults"]
        if last_system_act in (DialogueActType.LIST_RESULTS, DialogueActType.CHANGE_PAGE):
            acts.append("changePage")
        if self.candidates:
            acts.append("elicitInfoAPI")
            acts.append("elicitInfoAllAPI")
        if self.resolved_pool - self._rejected_sent:
            acts.append("rejectComponents")
        if last_system_act is DialogueActType.SUGG_KEYWORDS and self._rejectable_keywords():
            acts.append("rejectKeywords")
        return acts

    def _rejectable_keywords(self) -> list[str]:
        """Suggested keywords the user knows are off-target (zero weight in
        the target's vector)."""
        target_vec = self.dataset.vector_of(self.target_id)
        out = []
        for kw in self._last_suggested_keywords:
            idx = self.dataset.vocabulary.get(kw)
            if idx is None or target_vec[idx] == 0.0:
                out.append(kw)
        return out

    def select_act(self, last_system_act: DialogueActType) -> DialogueAct:
        """Pick the next user act from the bigram row for the last system
        act, restricted to the currently available acts."""
        if self.ended:
            raise RuntimeError("simulator already ended the conversation")
        if self.done:
            self.ended = True
            return DialogueAct(DialogueActType.END)

        row = self.params.bigram.get(last_system_act.wire_name, {})
        available = self._available_acts(last_system_act)
        weights = np.array([row.get(a, 0.0) for a in available])
        if weights.sum() <= 0:
            weights = np.ones(len(available))
        weights = weights / weights.sum()
        chosen = available[int(self.rng.choice(len(available), p=weights))]

        p = self.params
        if chosen == "provideQuery":
            if self.expressiveness < p.query_threshold:
                return DialogueAct(DialogueActType.UNSURE)
            self.expressiveness = max(0.0, self.expressiveness - p.expressiveness_query_cost)
            return DialogueAct(DialogueActType.PROVIDE_QUERY, self.generate_query())
        if chosen == "provideKeyword":
            if self.expressiveness < p.keyword_threshold:
                return DialogueAct(DialogueActType.UNSURE)
            self.expressiveness = max(0.0, self.expressiveness - p.expressiveness_keyword_cost)
            return DialogueAct(DialogueActType.PROVIDE_KEYWORD, self.generate_query(length=1))
        if chosen == "changePage":
            return DialogueAct(DialogueActType.USER_CHANGE_PAGE)
        if chosen == "elicitSuggAPI":
            return DialogueAct(DialogueActType.ELICIT_SUGG_API)
        if chosen == "elicitListResults":
            return DialogueAct(DialogueActType.ELICIT_LIST_RESULTS)
        if chosen == "elicitInfoAPI":
            cid = self._best_candidate()
            names = self.dataset.get(cid).property_names()
            prop = names[int(self.rng.integers(0, len(names)))]
            return DialogueAct(DialogueActType.ELICIT_INFO_API, {"id": cid, "properties": [prop]})
        if chosen == "elicitInfoAllAPI":
            return DialogueAct(DialogueActType.ELICIT_INFO_ALL_API, self._best_candidate())
        if chosen == "rejectComponents":
            ids = sorted(self.resolved_pool - self._rejected_sent)
            self._rejected_sent.update(ids)
            return DialogueAct(DialogueActType.REJECT_COMPONENTS, ids)
        if chosen == "rejectKeywords":
            return DialogueAct(DialogueActType.REJECT_KEYWORDS, self._rejectable_keywords())
        raise AssertionError(f"unreachable act choice {chosen!r}")


def new_user(dataset: ApiDataset, seed: int, params: SimulatorParams | None = None) -> SimulatedUser:
    return SimulatedUser(dataset, seed, params)
