"""API documentation corpus: loading, TF-IDF search vectors, ranking, paging,
and keyword recommendation.

A dataset is immutable once its vectors are built and can be shared across
sessions; :class:`RankedResults` is the per-session mutable search cursor.
"""

from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")
_SPLIT_RE = re.compile(r"[^0-9A-Za-z]+")


class CorpusError(Exception):
    """Corpus file does not parse or violates the corpus schema."""


class ExhaustedResultsError(Exception):
    """The result cursor is past the last ranked component."""


@dataclass(frozen=True)
class Param:
    name: str
    type: str


@dataclass(frozen=True)
class Signature:
    name: str
    return_type: str
    params: tuple[Param, ...] = ()


@dataclass
class ApiComponent:
    """One documented API function: signature, summary, and any number of
    other documented properties (long description, parameter docs, ...)."""

    id: str
    signature: Signature
    summary: str = ""
    properties: dict[str, str] = field(default_factory=dict)

    def signature_tokens(self) -> list[str]:
        toks = tokenize(self.signature.name) + tokenize(self.signature.return_type)
        for p in self.signature.params:
            toks += tokenize(p.name) + tokenize(p.type)
        return toks

    def all_tokens(self) -> list[str]:
        toks = self.signature_tokens() + tokenize(self.summary)
        for text in self.properties.values():
            toks += tokenize(text)
        return toks

    def property_names(self) -> list[str]:
        """Requestable property names; ``summary`` is always requestable."""
        return ["summary"] + list(self.properties)

    def property_text(self, name: str) -> str:
        if name == "summary":
            return self.summary
        if name in self.properties:
            return self.properties[name]
        raise KeyError(f"component {self.id!r} has no property {name!r}")


@dataclass
class ApiDataset:
    """Components plus the built search index (vocabulary, idf, unit-norm
    search vectors as rows of ``matrix``)."""

    api: str
    components: list[ApiComponent]
    vocabulary: dict[str, int] = field(default_factory=dict)
    idf: np.ndarray = field(default_factory=lambda: np.zeros(0))
    matrix: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    id_to_index: dict[str, int] = field(default_factory=dict)
    token_sets: list[frozenset[str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.components)

    def __contains__(self, component_id: str) -> bool:
        return component_id in self.id_to_index

    def get(self, component_id: str) -> ApiComponent:
        return self.components[self.id_to_index[component_id]]

    def vector_of(self, component_id: str) -> np.ndarray:
        return self.matrix[self.id_to_index[component_id]]


@dataclass
class SearchCriteria:
    """The user's evolving search: free-text query plus keyword/component
    filters. Provided and rejected keywords stay disjoint."""

    query: str | None = None
    provided_keywords: set[str] = field(default_factory=set)
    rejected_keywords: set[str] = field(default_factory=set)
    rejected_components: set[str] = field(default_factory=set)

    def is_empty(self) -> bool:
        return (
            self.query is None
            and not self.provided_keywords
            and not self.rejected_keywords
            and not self.rejected_components
        )

    def excluded_terms(self) -> set[str]:
        """Terms that keyword recommendation must never suggest."""
        terms: set[str] = set()
        for kw in self.provided_keywords | self.rejected_keywords:
            terms.update(tokenize(kw))
        if self.query:
            terms.update(tokenize(self.query))
        return terms


@dataclass
class RankedResults:
    """Scores aligned with dataset component order, the full ranking
    (descending score, seeded tie-break), and the paging cursor."""

    scores: np.ndarray
    ranking: list[str]
    result_index: int = 0

    def top_score(self) -> float:
        return float(self.scores.max()) if len(self.scores) else 0.0

    def score_of(self, dataset: ApiDataset, component_id: str) -> float:
        return float(self.scores[dataset.id_to_index[component_id]])

    def rank_of(self, component_id: str) -> int:
        """1-based rank of a component in the current ranking."""
        return self.ranking.index(component_id) + 1


def tokenize(text: str) -> list[str]:
    """Lowercased terms: split on non-alphanumerics, then split identifiers
    on underscore and camelCase boundaries; digit runs become terms."""
    out: list[str] = []
    for chunk in _SPLIT_RE.split(text):
        if chunk:
            out.extend(m.lower() for m in _CAMEL_RE.findall(chunk))
    return out


def _counts_vector(tokens: list[str], vocabulary: dict[str, int], idf: np.ndarray) -> np.ndarray:
    """L2-normalized raw-count TF-IDF vector; zero vector when no token is
    in the vocabulary."""
    v = np.zeros(len(vocabulary))
    for t in tokens:
        i = vocabulary.get(t)
        if i is not None:
            v[i] += 1.0
    v *= idf
    norm = np.linalg.norm(v)
    if norm > 0:
        v /= norm
    return v


def build_vectors(dataset: ApiDataset) -> ApiDataset:
    """Build the search index in place and return the dataset.

    Each component's vector is the re-normalized mean of its signature
    vector, summary vector, and the mean of its other-property vectors
    (the third part is dropped for components with no other properties).
    idf uses one pseudo-document per component: ln((1+n)/(1+df)) + 1.
    """
    n = len(dataset.components)
    doc_tokens = [c.all_tokens() for c in dataset.components]
    vocab: dict[str, int] = {t: i for i, t in enumerate(sorted({t for toks in doc_tokens for t in toks}))}

    df = np.zeros(len(vocab))
    for toks in doc_tokens:
        for t in set(toks):
            df[vocab[t]] += 1.0
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0

    rows = np.zeros((n, len(vocab)))
    for i, comp in enumerate(dataset.components):
        parts = [
            _counts_vector(comp.signature_tokens(), vocab, idf),
            _counts_vector(tokenize(comp.summary), vocab, idf),
        ]
        if comp.properties:
            prop_vecs = [_counts_vector(tokenize(text), vocab, idf) for text in comp.properties.values()]
            parts.append(np.mean(prop_vecs, axis=0))
        vec = np.mean(parts, axis=0)
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec = vec / norm
        else:
            warnings.warn(f"component {comp.id!r} has no tokens; using a zero search vector")
        rows[i] = vec

    dataset.vocabulary = vocab
    dataset.idf = idf
    dataset.matrix = rows
    dataset.id_to_index = {c.id: i for i, c in enumerate(dataset.components)}
    dataset.token_sets = [frozenset(toks) for toks in doc_tokens]
    return dataset


def query_vector(dataset: ApiDataset, query: str) -> np.ndarray:
    return _counts_vector(tokenize(query), dataset.vocabulary, dataset.idf)


def score_and_rank(dataset: ApiDataset, criteria: SearchCriteria, rng_seed: int) -> RankedResults:
    """Score every component against the criteria and rank them.

    Cosine similarity against the query vector (1.0 uniform when there is
    no query), then rejected components and components missing any provided
    keyword token are zeroed. Ties are broken by a deterministic shuffle
    derived from ``rng_seed``; the cursor starts at 0.
    """
    n = len(dataset.components)
    if criteria.query:
        qv = query_vector(dataset, criteria.query)
        scores = np.clip(dataset.matrix @ qv, 0.0, 1.0)
    else:
        scores = np.ones(n)

    for kw in criteria.provided_keywords:
        required = tokenize(kw)
        if not required:
            continue
        for i in range(n):
            if scores[i] > 0 and not all(t in dataset.token_sets[i] for t in required):
                scores[i] = 0.0
    for cid in criteria.rejected_components:
        scores[dataset.id_to_index[cid]] = 0.0

    tie_perm = np.random.default_rng(rng_seed).permutation(n)
    order = np.lexsort((tie_perm, -scores))
    ranking = [dataset.components[i].id for i in order]
    return RankedResults(scores=scores, ranking=ranking, result_index=0)


def page(results: RankedResults, n: int) -> list[str]:
    """Return up to ``n`` ids starting at the cursor and advance it; an
    exhausted cursor yields an empty page."""
    if n < 1:
        raise ValueError("page size must be >= 1")
    start = results.result_index
    end = min(start + n, len(results.ranking))
    results.result_index = end
    return results.ranking[start:end]


def next_suggestion(results: RankedResults) -> str:
    """Return the id at the cursor and advance it by one."""
    if results.result_index >= len(results.ranking):
        raise ExhaustedResultsError("no results left to suggest")
    cid = results.ranking[results.result_index]
    results.result_index += 1
    return cid


def recommend_keywords(
    dataset: ApiDataset,
    results: RankedResults,
    criteria: SearchCriteria,
    k: int,
) -> list[str]:
    """Up to ``k`` terms from the mean vector of the 20 top-ranked
    components, after zeroing terms the user already used or rejected.

    Ties break toward the lower vocabulary index; zero-valued terms are
    never returned.
    """
    if k < 1:
        raise ValueError("keyword count must be >= 1")
    top = results.ranking[:20]
    mean_vec = dataset.matrix[[dataset.id_to_index[cid] for cid in top]].mean(axis=0)
    for term in criteria.excluded_terms():
        i = dataset.vocabulary.get(term)
        if i is not None:
            mean_vec[i] = 0.0

    order = np.lexsort((np.arange(len(mean_vec)), -mean_vec))
    terms = [t for t, _ in sorted(dataset.vocabulary.items(), key=lambda kv: kv[1])]
    return [terms[i] for i in order[:k] if mean_vec[i] > 0.0]


def _require(cond: bool, where: str, message: str):
    if not cond:
        raise CorpusError(f"{where}: {message}")


def _reject_duplicate_keys(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise CorpusError(f"duplicate key {key!r} in corpus object")
        obj[key] = value
    return obj


def parse_dataset(data: dict, source: str = "<corpus>") -> ApiDataset:
    """Validate the corpus schema and build the search index."""
    _require(isinstance(data, dict), source, "top level must be an object")
    _require(isinstance(data.get("api"), str), source, "missing string field 'api'")
    raw = data.get("components")
    _require(isinstance(raw, list) and len(raw) >= 1, source, "'components' must be a non-empty list")

    components: list[ApiComponent] = []
    seen: set[str] = set()
    for i, item in enumerate(raw):
        where = f"{source}: components[{i}]"
        _require(isinstance(item, dict), where, "must be an object")
        cid = item.get("id")
        _require(isinstance(cid, str) and cid != "", where, "missing non-empty string 'id'")
        where = f"{source}: components[{i}] (id {cid!r})"
        _require(cid not in seen, where, "duplicate component id")
        seen.add(cid)

        sig = item.get("signature", {})
        _require(isinstance(sig, dict), where, "'signature' must be an object")
        name = sig.get("name", cid)
        rtype = sig.get("return_type", "")
        _require(isinstance(name, str), where, "'signature.name' must be a string")
        _require(isinstance(rtype, str), where, "'signature.return_type' must be a string")
        params = []
        for j, p in enumerate(sig.get("params", [])):
            _require(
                isinstance(p, dict) and isinstance(p.get("name"), str) and isinstance(p.get("type"), str),
                where,
                f"'signature.params[{j}]' must be {{name, type}} strings",
            )
            params.append(Param(name=p["name"], type=p["type"]))

        summary = item.get("summary", "")
        _require(isinstance(summary, str), where, "'summary' must be a string")
        props = item.get("properties", {})
        _require(isinstance(props, dict), where, "'properties' must be an object of strings")
        for pname, ptext in props.items():
            _require(isinstance(ptext, str), where, f"property {pname!r} must be a string")
        _require(
            bool(summary.strip()) or any(v.strip() for v in props.values()),
            where,
            "summary may be empty only if some property is non-empty",
        )

        components.append(
            ApiComponent(
                id=cid,
                signature=Signature(name=name, return_type=rtype, params=tuple(params)),
                summary=summary,
                properties=dict(props),
            )
        )

    return build_vectors(ApiDataset(api=data["api"], components=components))


def load_dataset(path) -> ApiDataset:
    """Load and index a corpus JSON file."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f, object_pairs_hook=_reject_duplicate_keys)
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorpusError(f"corpus file {path} is not valid JSON: {exc}") from exc
    return parse_dataset(data, source=str(path))


# Word stock for synthetic corpora: short pseudo-identifier syllables.
_SYLLABLES = [
    "ab", "ack", "al", "ar", "bak", "bal", "ben", "bit", "bor", "cal",
    "cam", "cap", "cel", "cin", "cor", "dal", "dar", "del", "dim", "dor",
    "eb", "el", "em", "en", "fal", "fen", "fin", "for", "gal", "gen",
    "gil", "gor", "hal", "hen", "hin", "hol", "il", "im", "in", "ir",
    "jal", "jen", "jin", "jor", "kal", "kel", "kin", "kor", "lam", "len",
    "lin", "lor", "mal", "men", "mir", "mor", "nal", "nen", "nim", "nor",
    "ob", "ol", "om", "on", "pal", "pen", "pin", "por", "qal", "qen",
    "ral", "ren", "rin", "ror", "sal", "sen", "sin", "sor", "tal", "ten",
    "tin", "tor", "ul", "um", "un", "ur", "val", "ven", "vin", "vor",
    "wal", "wen", "win", "wor", "xal", "xen", "yal", "yen", "zal", "zen",
]

_GLUE_WORDS = ["the", "a", "for", "with", "and", "given", "current", "new"]
_VERBS = ["open", "close", "read", "write", "create", "destroy", "get", "set", "send", "list"]
_TYPES = ["int", "void", "char", "size_t", "bool", "double"]


def generate_corpus(count: int, vocab_size: int, seed: int, api: str = "synthetic") -> dict:
    """Emit a synthetic corpus document in the corpus JSON schema.

    Each component gets a small set of topic words drawn from a seeded
    pseudo-word vocabulary; its name, summary, and properties reuse those
    words so queries sampled from a component's vector can find it.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if vocab_size < 8:
        raise ValueError("vocab_size must be >= 8")
    rng = np.random.default_rng(seed)

    words: list[str] = []
    seen: set[str] = set()
    while len(words) < vocab_size:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(int(rng.integers(1, 3)) + 1))
        if w not in seen:
            seen.add(w)
            words.append(w)

    components = []
    used_ids: set[str] = set()
    for _ in range(count):
        topic = [words[int(i)] for i in rng.choice(vocab_size, size=int(rng.integers(3, 7)), replace=False)]
        verb = _VERBS[int(rng.integers(0, len(_VERBS)))]
        name = "_".join([api, verb] + topic[:2])
        if name in used_ids:
            name = f"{name}_{len(used_ids)}"
        used_ids.add(name)

        def phrase(k: int) -> str:
            picks = [topic[int(i)] for i in rng.integers(0, len(topic), size=k)]
            glue = _GLUE_WORDS[int(rng.integers(0, len(_GLUE_WORDS)))]
            return f"{verb} {glue} " + " ".join(picks)

        params = [
            {"name": topic[int(rng.integers(0, len(topic)))], "type": _TYPES[int(rng.integers(0, len(_TYPES)))]}
            for _ in range(int(rng.integers(0, 3)))
        ]
        properties = {
            "description": phrase(4),
            "returns": f"{_TYPES[int(rng.integers(0, len(_TYPES)))]} {phrase(2)}",
        }
        if rng.random() < 0.5:
            properties["example"] = f"{name}({', '.join(p['name'] for p in params)})"

        components.append(
            {
                "id": name,
                "signature": {
                    "name": name,
                    "return_type": _TYPES[int(rng.integers(0, len(_TYPES)))],
                    "params": params,
                },
                "summary": phrase(3),
                "properties": properties,
            }
        )
    return {"api": api, "components": components}
