"""Query suggestion methods behind one interface.

Four ways to propose up to 10 rewrites for a query:

* ``rm3`` - classic pseudo-relevance feedback: score expansion terms from the
  top retrieved documents with a Dirichlet-smoothed relevance model and
  append each top term to the original query;
* ``sampling_qd`` - decode points sampled uniformly from an epsilon-ball
  around the query embedding (an ensembling baseline, no feedback);
* ``prf_traversal`` - decode points part-way along the line from the query
  embedding to each top result's embedding (feedback-conditioned rewrites);
* ``plain`` - temperature-sampled decodings of the query's own embedding
  (rewrites without feedback).

All suggesters are pure given an immutable index and fully seeded.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document, IndexSnapshot, Qrels, Query, search
from .decoder import DecoderConfig, Vocabulary, decode, decode_samples
from .embedding import encode, inner_product, normalize, tokenize
from .errors import EmptyQuery
from .metrics import ndcg_at_k
from .stopwords import STOPWORDS

MAX_SUGGESTIONS = 10

# Softmax temperature for the plain sampler, calibrated on the shipped
# fixture: ~9 of 10 samples unique while staying near the greedy bag.
PLAIN_TEMPERATURE = 0.1

METHODS = ("rm3", "sampling_qd", "prf_traversal", "plain")


@dataclass(frozen=True)
class Suggestion:
    text: str
    ndcg: float | None = None
    ip_gold: float | None = None


@dataclass(frozen=True)
class SuggestionSet:
    query_id: str
    method: str
    suggestions: list[Suggestion]

    def texts(self) -> list[str]:
        return [s.text for s in self.suggestions]

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "method": self.method,
            "suggestions": [
                {"text": s.text, "ndcg": s.ndcg, "ip_gold": s.ip_gold}
                for s in self.suggestions
            ],
        }


@dataclass(frozen=True)
class RM3Config:
    mu: float = 2500.0
    fb_docs: int = 5
    fb_terms: int = 10
    stopwords: frozenset = STOPWORDS

    def __post_init__(self) -> None:
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.fb_docs < 1 or self.fb_terms < 1:
            raise ValueError("fb_docs and fb_terms must be >= 1")


@dataclass(frozen=True)
class SamplingConfig:
    epsilon: float = 0.05
    num_samples: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")


class TermStats:
    """Per-document and collection term frequencies for the relevance model."""

    def __init__(self, docs: Iterable[Document]):
        self.doc_tf: dict[str, Counter] = {}
        self.doc_len: dict[str, int] = {}
        self.collection: Counter = Counter()
        self.total_tokens = 0
        for doc in docs:
            toks = tokenize(doc.text)
            tf = Counter(toks)
            self.doc_tf[doc.doc_id] = tf
            self.doc_len[doc.doc_id] = len(toks)
            self.collection.update(tf)
            self.total_tokens += len(toks)

    def p_collection(self, term: str) -> float:
        if self.total_tokens == 0:
            return 0.0
        return self.collection[term] / self.total_tokens

    def p_term_given_doc(self, term: str, doc_id: str, mu: float) -> float:
        """Dirichlet-smoothed unigram probability P(term | doc)."""
        tf = self.doc_tf[doc_id][term]
        return (tf + mu * self.p_collection(term)) / (self.doc_len[doc_id] + mu)


def rm3_term_scores(
    query_tokens: Sequence[str],
    top_doc_ids: Sequence[str],
    stats: TermStats,
    cfg: RM3Config,
) -> list[tuple[str, float]]:
    """Relevance-model scores rm(w) = sum_D P(w|D) P(Q|D) over candidate terms.

    Candidates are the feedback documents' terms minus stopwords and query
    terms; the query likelihood P(Q|D) multiplies the smoothed probability
    of each query token occurrence. Returned sorted by (score desc, term asc).
    """
    query_terms = set(query_tokens)
    p_q_given_d = {}
    for did in top_doc_ids:
        p = 1.0
        for tok in query_tokens:
            p *= stats.p_term_given_doc(tok, did, cfg.mu)
        p_q_given_d[did] = p
    candidates = set()
    for did in top_doc_ids:
        candidates.update(stats.doc_tf[did])
    candidates -= cfg.stopwords
    candidates -= query_terms
    scored = []
    for term in candidates:
        rm = sum(
            stats.p_term_given_doc(term, did, cfg.mu) * p_q_given_d[did]
            for did in top_doc_ids
        )
        scored.append((term, rm))
    scored.sort(key=lambda ts: (-ts[1], ts[0]))
    return scored


def _score_texts(
    texts: Sequence[str],
    query_id: str,
    method: str,
    index: IndexSnapshot,
    docs_by_id: Mapping[str, Document] | None,
    qrels: Qrels | None,
) -> SuggestionSet:
    """Attach nDCG@10 and gold inner product to suggestion texts when
    judgments are available; otherwise emit bare texts."""
    suggestions: list[Suggestion] = []
    grades = qrels.grades_for(query_id) if qrels is not None else {}
    gold = qrels.gold_for(query_id) if qrels is not None else None
    gold_emb = None
    if gold is not None and docs_by_id is not None and gold in docs_by_id:
        gold_emb = encode(docs_by_id[gold].text, index.encoder_cfg)
    for text in texts:
        if qrels is not None and grades:
            emb = encode(text, index.encoder_cfg)
            ndcg = ndcg_at_k(search(index, emb, 10), grades, 10)
            ip = inner_product(emb, gold_emb) if gold_emb is not None else None
            suggestions.append(Suggestion(text=text, ndcg=ndcg, ip_gold=ip))
        else:
            suggestions.append(Suggestion(text=text))
    return SuggestionSet(query_id=query_id, method=method, suggestions=suggestions)


def rm3_suggest(
    query: Query,
    index: IndexSnapshot,
    stats: TermStats,
    cfg: RM3Config = RM3Config(),
    docs_by_id: Mapping[str, Document] | None = None,
    qrels: Qrels | None = None,
) -> SuggestionSet:
    """Original query plus one top relevance-model term per suggestion."""
    query_tokens = tokenize(query.text)
    if not query_tokens:
        raise EmptyQuery(query.query_id)
    result = search(index, encode(query.text, index.encoder_cfg), cfg.fb_docs)
    scored = rm3_term_scores(query_tokens, result.doc_ids(), stats, cfg)
    texts = [f"{query.text} {term}" for term, _ in scored[: cfg.fb_terms]]
    return _score_texts(
        texts[:MAX_SUGGESTIONS], query.query_id, "rm3", index, docs_by_id, qrels
    )


def sample_in_ball(
    rng: np.random.Generator, center: np.ndarray, epsilon: float
) -> np.ndarray:
    """One point uniform in the epsilon-ball around ``center`` (unnormalized).

    Direction from a normalized Gaussian draw; radius epsilon * u^(1/dim)
    with u uniform in (0, 1], the inverse-CDF of the ball's radial density.
    """
    direction = rng.standard_normal(center.shape[0])
    direction /= np.linalg.norm(direction)
    u = 1.0 - rng.random()  # (0, 1]
    radius = epsilon * u ** (1.0 / center.shape[0])
    return center + radius * direction


def sampling_qd_suggest(
    query: Query,
    index: IndexSnapshot,
    vocab: Vocabulary,
    cfg: SamplingConfig = SamplingConfig(),
    dec_cfg: DecoderConfig = DecoderConfig(),
    docs_by_id: Mapping[str, Document] | None = None,
    qrels: Qrels | None = None,
) -> SuggestionSet:
    """Decode points sampled uniformly from an epsilon-ball around the query."""
    if not tokenize(query.text):
        raise EmptyQuery(query.query_id)
    z = encode(query.text, index.encoder_cfg)
    rng = np.random.default_rng(cfg.seed)
    texts: list[str] = []
    seen: set[str] = set()
    for _ in range(cfg.num_samples):
        point = normalize(sample_in_ball(rng, z, cfg.epsilon))
        decoded = decode(point, vocab, dec_cfg)
        if decoded.text not in seen:
            seen.add(decoded.text)
            texts.append(decoded.text)
    return _score_texts(
        texts[:MAX_SUGGESTIONS], query.query_id, "sampling_qd", index, docs_by_id, qrels
    )


def prf_traversal_suggest(
    query: Query,
    index: IndexSnapshot,
    vocab: Vocabulary,
    k_fracs: Sequence[float] = (0.3, 0.5, 0.7),
    fb_docs: int = 5,
    dec_cfg: DecoderConfig = DecoderConfig(),
    docs_by_id: Mapping[str, Document] | None = None,
    qrels: Qrels | None = None,
) -> SuggestionSet:
    """Decode part-way points toward each top result's embedding.

    For every feedback document and fraction f, the decode target is
    normalize(q + f (d - q)); candidates are deduplicated and ranked by
    re-encoding similarity to their own target, ties by text. Deterministic.
    """
    if not tokenize(query.text):
        raise EmptyQuery(query.query_id)
    if not all(0.0 < f < 1.0 for f in k_fracs):
        raise ValueError("k_fracs must lie in (0, 1)")
    z = encode(query.text, index.encoder_cfg)
    result = search(index, z, fb_docs)
    best_sim: dict[str, float] = {}
    for did, _ in result.entries:
        d_emb = index.row(did)
        for f in k_fracs:
            target = normalize(z + f * (d_emb - z))
            decoded = decode(target, vocab, dec_cfg)
            sim = decoded.reencode_similarity
            if decoded.text not in best_sim or sim > best_sim[decoded.text]:
                best_sim[decoded.text] = sim
    ranked = sorted(best_sim.items(), key=lambda kv: (-kv[1], kv[0]))
    texts = [text for text, _ in ranked[:MAX_SUGGESTIONS]]
    return _score_texts(
        texts, query.query_id, "prf_traversal", index, docs_by_id, qrels
    )


def plain_suggest(
    query: Query,
    index: IndexSnapshot,
    vocab: Vocabulary,
    dec_cfg: DecoderConfig | None = None,
    docs_by_id: Mapping[str, Document] | None = None,
    qrels: Qrels | None = None,
) -> SuggestionSet:
    """Sampled decodings of the query's own embedding (no feedback)."""
    if not tokenize(query.text):
        raise EmptyQuery(query.query_id)
    if dec_cfg is None:
        dec_cfg = DecoderConfig(
            sample_temperature=PLAIN_TEMPERATURE, num_samples=MAX_SUGGESTIONS
        )
    z = encode(query.text, index.encoder_cfg)
    decodings = decode_samples(z, vocab, dec_cfg)
    texts = [d.text for d in decodings][:MAX_SUGGESTIONS]
    return _score_texts(texts, query.query_id, "plain", index, docs_by_id, qrels)


def suggest(
    method: str,
    query: Query,
    index: IndexSnapshot,
    vocab: Vocabulary,
    stats: TermStats | None = None,
    rm3_cfg: RM3Config = RM3Config(),
    sampling_cfg: SamplingConfig = SamplingConfig(),
    dec_cfg: DecoderConfig = DecoderConfig(),
    docs_by_id: Mapping[str, Document] | None = None,
    qrels: Qrels | None = None,
) -> SuggestionSet:
    """Dispatch to one suggester by method name."""
    if method == "rm3":
        if stats is None:
            raise ValueError("rm3 requires corpus term statistics")
        return rm3_suggest(query, index, stats, rm3_cfg, docs_by_id, qrels)
    if method == "sampling_qd":
        return sampling_qd_suggest(
            query, index, vocab, sampling_cfg, dec_cfg, docs_by_id, qrels
        )
    if method == "prf_traversal":
        return prf_traversal_suggest(
            query, index, vocab, dec_cfg=dec_cfg, docs_by_id=docs_by_id, qrels=qrels
        )
    if method == "plain":
        plain_cfg = replace(
            dec_cfg,
            sample_temperature=(
                dec_cfg.sample_temperature
                if dec_cfg.sample_temperature > 0
                else PLAIN_TEMPERATURE
            ),
            num_samples=MAX_SUGGESTIONS,
        )
        return plain_suggest(query, index, vocab, plain_cfg, docs_by_id, qrels)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
