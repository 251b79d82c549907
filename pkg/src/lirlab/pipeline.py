"""Pipeline plumbing shared by the CLI, the HTTP service, and the eval suite.

Bundles the loaded artifacts (corpus, queries, qrels, index, vocabulary,
term statistics) into one immutable context and runs the suggestion
benchmark over it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .corpus import (
    Document,
    IndexSnapshot,
    Qrels,
    Query,
    build_index,
    load_index,
    read_corpus,
    read_qrels,
    read_queries,
    search,
)
from .decoder import DecoderConfig, Vocabulary
from .embedding import EncoderConfig, encode
from .errors import LirlabError
from .metrics import DEFAULT_KS, EvalReport, NGramLM, assemble_report, ndcg_at_k
from .suggesters import METHODS, RM3Config, SamplingConfig, TermStats, suggest
from .traversal import stable_hash64

METHOD_ALIASES = {
    "rm3": "rm3",
    "sampling": "sampling_qd",
    "sampling_qd": "sampling_qd",
    "prf": "prf_traversal",
    "prf_traversal": "prf_traversal",
    "plain": "plain",
}


def resolve_method(name: str) -> str:
    try:
        return METHOD_ALIASES[name.strip()]
    except KeyError:
        raise LirlabError(
            f"unknown method {name!r}; expected one of {sorted(METHOD_ALIASES)}"
        )


@dataclass
class LabContext:
    """Everything a suggestion or traversal run needs, loaded once."""

    encoder_cfg: EncoderConfig
    docs: list[Document]
    docs_by_id: dict[str, Document]
    index: IndexSnapshot
    vocab: Vocabulary
    stats: TermStats
    queries: list[Query] = field(default_factory=list)
    qrels: Qrels | None = None

    @property
    def queries_by_id(self) -> dict[str, Query]:
        return {q.query_id: q for q in self.queries}

    def query_id_for_text(self, text: str) -> str | None:
        for q in self.queries:
            if q.text == text:
                return q.query_id
        return None


def load_context(
    corpus_path: str | Path,
    index_path: str | Path | None = None,
    queries_path: str | Path | None = None,
    qrels_path: str | Path | None = None,
    encoder_cfg: EncoderConfig | None = None,
) -> LabContext:
    """Load corpus files and an index (building one when not given)."""
    docs = read_corpus(corpus_path)
    if index_path is not None:
        index = load_index(index_path)
    else:
        index = build_index(docs, encoder_cfg or EncoderConfig())
    ctx = LabContext(
        encoder_cfg=index.encoder_cfg,
        docs=docs,
        docs_by_id={d.doc_id: d for d in docs},
        index=index,
        vocab=Vocabulary.from_documents(docs, index.encoder_cfg),
        stats=TermStats(docs),
        queries=read_queries(queries_path) if queries_path else [],
        qrels=read_qrels(qrels_path) if qrels_path else None,
    )
    return ctx


def suggest_for_query(
    ctx: LabContext,
    method: str,
    query: Query,
    seed: int = 0,
    dec_cfg: DecoderConfig = DecoderConfig(),
    sampling_cfg: SamplingConfig = SamplingConfig(),
    rm3_cfg: RM3Config = RM3Config(),
    with_metrics: bool = True,
):
    """One suggestion set; per-query seeding keeps runs order-independent."""
    per_query_seed = seed ^ stable_hash64(query.query_id)
    return suggest(
        resolve_method(method),
        query,
        ctx.index,
        ctx.vocab,
        stats=ctx.stats,
        rm3_cfg=rm3_cfg,
        sampling_cfg=replace(sampling_cfg, seed=per_query_seed),
        dec_cfg=replace(dec_cfg, seed=per_query_seed),
        docs_by_id=ctx.docs_by_id,
        qrels=ctx.qrels if with_metrics else None,
    )


def run_suggestion_eval(
    ctx: LabContext,
    methods: list[str] | None = None,
    seed: int = 0,
    ks=DEFAULT_KS,
    n_boot: int = 1000,
    limit: int | None = None,
    dec_cfg: DecoderConfig = DecoderConfig(),
    sampling_cfg: SamplingConfig = SamplingConfig(),
    rm3_cfg: RM3Config = RM3Config(),
    lm_order: int = 3,
    lm_delta: float = 0.1,
) -> EvalReport:
    """Benchmark suggestion methods with best-of-k nDCG@10 over the qrels."""
    if ctx.qrels is None or not ctx.queries:
        raise LirlabError("evaluation requires queries and qrels")
    methods = [resolve_method(m) for m in (methods or list(METHODS))]
    queries = [q for q in ctx.queries if ctx.qrels.gold_for(q.query_id) is not None]
    if limit is not None:
        queries = queries[:limit]
    lm = NGramLM(order=lm_order, delta=lm_delta).fit(d.text for d in ctx.docs)

    original_ndcgs: list[float] = []
    original_texts: list[str] = []
    per_method_ndcgs: dict[str, list[list[float]]] = {m: [] for m in methods}
    per_method_texts: dict[str, list[list[str]]] = {m: [] for m in methods}
    for query in queries:
        grades = ctx.qrels.grades_for(query.query_id)
        q_emb = encode(query.text, ctx.encoder_cfg)
        original_ndcgs.append(ndcg_at_k(search(ctx.index, q_emb, 10), grades, 10))
        original_texts.append(query.text)
        for method in methods:
            sset = suggest_for_query(
                ctx, method, query, seed, dec_cfg, sampling_cfg, rm3_cfg
            )
            per_method_ndcgs[method].append(
                [s.ndcg for s in sset.suggestions if s.ndcg is not None]
            )
            per_method_texts[method].append(sset.texts())
    return assemble_report(
        per_method_ndcgs,
        per_method_texts,
        original_ndcgs,
        original_texts,
        lm=lm,
        ks=ks,
        n_boot=n_boot,
        seed=seed,
    )
