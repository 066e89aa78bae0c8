"""Brute-force dict-based reimplementations of the retrieval math, used as
independent oracles by the tests.

Everything here is deliberately naive: plain dicts, explicit loops, no numpy.
Tokenization is shared with the package (it has its own direct tests); the
weighting, averaging, cosine, and recommendation arithmetic are recomputed
from scratch.
"""

from __future__ import annotations

import math

from apidialog.corpus import ApiComponent, ApiDataset, SearchCriteria, tokenize


def counts(tokens: list[str]) -> dict[str, float]:
    c: dict[str, float] = {}
    for t in tokens:
        c[t] = c.get(t, 0.0) + 1.0
    return c


def idf_table(components: list[ApiComponent]) -> dict[str, float]:
    n = len(components)
    df: dict[str, float] = {}
    for comp in components:
        for t in set(comp.all_tokens()):
            df[t] = df.get(t, 0.0) + 1.0
    return {t: math.log((1.0 + n) / (1.0 + d)) + 1.0 for t, d in df.items()}


def l2_normalize(vec: dict[str, float]) -> dict[str, float]:
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm == 0.0:
        return dict(vec)
    return {t: v / norm for t, v in vec.items()}


def tfidf(tokens: list[str], idf: dict[str, float]) -> dict[str, float]:
    return l2_normalize({t: c * idf[t] for t, c in counts(tokens).items() if t in idf})


def mean_vectors(vecs: list[dict[str, float]]) -> dict[str, float]:
    out: dict[str, float] = {}
    for vec in vecs:
        for t, v in vec.items():
            out[t] = out.get(t, 0.0) + v
    return {t: v / len(vecs) for t, v in out.items()}


def component_vector(comp: ApiComponent, idf: dict[str, float]) -> dict[str, float]:
    parts = [tfidf(comp.signature_tokens(), idf), tfidf(tokenize(comp.summary), idf)]
    if comp.properties:
        parts.append(mean_vectors([tfidf(tokenize(text), idf) for text in comp.properties.values()]))
    return l2_normalize(mean_vectors(parts))


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    return sum(v * b.get(t, 0.0) for t, v in a.items())


def all_vectors(components: list[ApiComponent]) -> dict[str, dict[str, float]]:
    idf = idf_table(components)
    return {c.id: component_vector(c, idf) for c in components}


def brute_scores(dataset: ApiDataset, criteria: SearchCriteria) -> dict[str, float]:
    """Per-component similarity scores, recomputed from raw components."""
    idf = idf_table(dataset.components)
    vectors = {c.id: component_vector(c, idf) for c in dataset.components}
    qv = tfidf(tokenize(criteria.query), idf) if criteria.query else None

    scores: dict[str, float] = {}
    for comp in dataset.components:
        s = cosine(qv, vectors[comp.id]) if qv is not None else 1.0
        tokens = set(comp.all_tokens())
        for kw in criteria.provided_keywords:
            needed = tokenize(kw)
            if needed and not all(t in tokens for t in needed):
                s = 0.0
        if comp.id in criteria.rejected_components:
            s = 0.0
        scores[comp.id] = min(max(s, 0.0), 1.0)
    return scores


def brute_recommendation(
    dataset: ApiDataset,
    ranking: list[str],
    criteria: SearchCriteria,
    k: int,
) -> list[str]:
    """Keyword recommendation replayed over the given ranking."""
    vectors = all_vectors(dataset.components)
    top = ranking[:20]
    mean = mean_vectors([vectors[cid] for cid in top])

    banned: set[str] = set()
    for kw in criteria.provided_keywords | criteria.rejected_keywords:
        banned.update(tokenize(kw))
    if criteria.query:
        banned.update(tokenize(criteria.query))
    for t in banned:
        mean.pop(t, None)

    vocab_index = {t: i for t, i in dataset.vocabulary.items()}
    ordered = sorted(
        ((t, v) for t, v in mean.items() if v > 0.0),
        key=lambda kv: (-kv[1], vocab_index[kv[0]]),
    )
    return [t for t, _ in ordered[:k]]
