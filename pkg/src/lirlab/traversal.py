"""Latent-line traversal from query to gold paragraph, and dataset generation.

Walking ``k`` equidistant increments from a query embedding toward its gold
paragraph embedding and decoding each interior point yields candidate
reformulations. A reformulation is kept for the dataset only when it (a)
reaches nDCG@10 of exactly 1, (b) improves on the original query's nDCG, and
(c) has a strictly larger inner product with the gold embedding than the
original query. Gold embeddings are computed fresh from document text (not
the float32 index rows) so records can be re-verified bit-for-bit from raw
texts.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document, IndexSnapshot, Qrels, Query, search
from .decoder import Decoding, DecoderConfig, Vocabulary, decode
from .embedding import encode, inner_product, normalize
from .errors import DimMismatch, EmptyInput, UnknownDocId
from .metrics import ndcg_at_k


@dataclass
class TraversalPath:
    """Points q_0..q_k on the renormalized line from q to d."""

    q: np.ndarray
    d: np.ndarray
    k: int
    points: list[np.ndarray]  # unit vectors
    raw_points: list[np.ndarray]  # pre-normalization affine combinations


def make_path(q: np.ndarray, d: np.ndarray, k: int) -> TraversalPath:
    """q_kappa = normalize(q + (kappa/k) (d - q)) for kappa = 0..k."""
    q = np.asarray(q, dtype=np.float64)
    d = np.asarray(d, dtype=np.float64)
    if q.shape != d.shape:
        raise DimMismatch(f"shapes {q.shape} and {d.shape} differ")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    raw_points = [q + (kappa / k) * (d - q) for kappa in range(k + 1)]
    return TraversalPath(
        q=q, d=d, k=k, points=[normalize(p) for p in raw_points], raw_points=raw_points
    )


@dataclass(frozen=True)
class StepDecoding:
    kappa: int
    decoding: Decoding
    ndcg_at_10: float
    ip_with_gold: float


@dataclass(frozen=True)
class ReformulationRecord:
    query_id: str
    original_text: str
    reformulation_text: str
    kappa: int
    ndcg_before: float
    ndcg_after: float
    ip_before: float
    ip_after: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "query_id": self.query_id,
                "original_text": self.original_text,
                "reformulation_text": self.reformulation_text,
                "kappa": self.kappa,
                "ndcg_before": self.ndcg_before,
                "ndcg_after": self.ndcg_after,
                "ip_before": self.ip_before,
                "ip_after": self.ip_after,
            },
            separators=(",", ":"),
        )


def traverse_and_decode(
    query: Query,
    gold_doc_id: str,
    k: int,
    index: IndexSnapshot,
    docs_by_id: Mapping[str, Document],
    vocab: Vocabulary,
    dec_cfg: DecoderConfig,
    grades: Mapping[str, int],
) -> list[StepDecoding]:
    """Decode steps kappa = 1..k and score each against the query's qrels."""
    if gold_doc_id not in index or gold_doc_id not in docs_by_id:
        raise UnknownDocId(gold_doc_id)
    cfg = index.encoder_cfg
    q_emb = encode(query.text, cfg)
    d_emb = encode(docs_by_id[gold_doc_id].text, cfg)
    path = make_path(q_emb, d_emb, k)
    steps: list[StepDecoding] = []
    for kappa in range(1, k + 1):
        decoding = decode(path.points[kappa], vocab, dec_cfg)
        reencoded = encode(decoding.text, cfg)
        result = search(index, reencoded, 10)
        steps.append(
            StepDecoding(
                kappa=kappa,
                decoding=decoding,
                ndcg_at_10=ndcg_at_k(result, grades, 10),
                ip_with_gold=inner_product(reencoded, d_emb),
            )
        )
    return steps


def stable_hash64(s: str) -> int:
    """Platform-independent 64-bit hash (per-query seed derivation)."""
    return int.from_bytes(hashlib.blake2b(s.encode("utf-8"), digest_size=8).digest(), "little")


@dataclass
class DatasetStats:
    queries_processed: int = 0
    queries_skipped_missing_gold: int = 0
    queries_with_optimal: int = 0
    records_emitted: int = 0

    @property
    def fraction_with_optimal(self) -> float:
        if self.queries_processed == 0:
            return 0.0
        return self.queries_with_optimal / self.queries_processed


@dataclass
class DatasetResult:
    records: list[ReformulationRecord]
    stats: DatasetStats


def generate_dataset(
    queries: Sequence[Query],
    qrels: Qrels,
    index: IndexSnapshot,
    docs_by_id: Mapping[str, Document],
    vocab: Vocabulary,
    dec_cfg: DecoderConfig,
    k: int = 20,
    seed: int = 0,
) -> DatasetResult:
    """Traverse every query toward its gold and keep successful rewrites.

    The traversal target is the highest-graded gold (ties: smallest doc_id);
    queries without a usable gold are counted and skipped. Work per query is
    independent and seeded with ``seed XOR stable_hash64(query_id)``, so the
    output is deterministic regardless of scheduling; records are emitted in
    ascending (query_id, kappa) order.
    """
    stats = DatasetStats()
    records: list[ReformulationRecord] = []
    cfg = index.encoder_cfg
    for query in sorted(queries, key=lambda q: q.query_id):
        gold = qrels.gold_for(query.query_id)
        if gold is None or gold not in index or gold not in docs_by_id:
            stats.queries_skipped_missing_gold += 1
            continue
        stats.queries_processed += 1
        grades = qrels.grades_for(query.query_id)
        q_emb = encode(query.text, cfg)
        d_emb = encode(docs_by_id[gold].text, cfg)
        ndcg_before = ndcg_at_k(search(index, q_emb, 10), grades, 10)
        ip_before = inner_product(q_emb, d_emb)
        per_query_cfg = replace(dec_cfg, seed=seed ^ stable_hash64(query.query_id))
        steps = traverse_and_decode(
            query, gold, k, index, docs_by_id, vocab, per_query_cfg, grades
        )
        if any(s.ndcg_at_10 == 1.0 for s in steps):
            stats.queries_with_optimal += 1
        for step in steps:
            if (
                step.ndcg_at_10 == 1.0
                and step.ndcg_at_10 > ndcg_before
                and step.ip_with_gold > ip_before
            ):
                records.append(
                    ReformulationRecord(
                        query_id=query.query_id,
                        original_text=query.text,
                        reformulation_text=step.decoding.text,
                        kappa=step.kappa,
                        ndcg_before=ndcg_before,
                        ndcg_after=step.ndcg_at_10,
                        ip_before=ip_before,
                        ip_after=step.ip_with_gold,
                    )
                )
    stats.records_emitted = len(records)
    return DatasetResult(records=records, stats=stats)


def write_dataset_jsonl(records: Iterable[ReformulationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")


def write_training_view(
    records: Iterable[ReformulationRecord],
    queries_by_id: Mapping[str, Query],
    index: IndexSnapshot,
    docs_by_id: Mapping[str, Document],
    path: str | Path,
    context_k: int = 5,
) -> None:
    """Fine-tuning-ready view: original query, top-5 result texts, target.

    The context is retrieved for the *original* query, so an external model
    can learn the (query + search results) -> rewrite mapping directly.
    """
    cfg = index.encoder_cfg
    context_cache: dict[str, list[str]] = {}
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            if rec.query_id not in context_cache:
                result = search(index, encode(rec.original_text, cfg), context_k)
                context_cache[rec.query_id] = [
                    docs_by_id[did].text for did, _ in result.entries
                ]
            fh.write(
                json.dumps(
                    {
                        "query": rec.original_text,
                        "context": context_cache[rec.query_id],
                        "target": rec.reformulation_text,
                    },
                    separators=(",", ":"),
                )
            )
            fh.write("\n")


_NDCG_BIN_LABELS = [f"[{i / 10:.1f},{(i + 1) / 10:.1f})" for i in range(10)] + ["[1,1]"]
_IP_BIN_LABELS = [f"[{-1 + i / 10:.1f},{-1 + (i + 1) / 10:.1f})" for i in range(19)] + [
    "[0.9,1.0]"
]


def _ndcg_bin(v: float) -> int:
    if v >= 1.0:
        return 10
    return min(9, max(0, int(v * 10)))


def _ip_bin(v: float) -> int:
    return min(19, max(0, int((v + 1.0) * 10)))


def dataset_histograms(
    records: Sequence[ReformulationRecord],
    originals: Sequence[tuple[float, float]],
) -> dict:
    """Histogram JSON for (nDCG, inner product): original vs best rewrite.

    ``originals`` are (ndcg, ip) pairs for the original queries. The best
    rewrite per query is the record maximizing (ndcg_after, ip_after).
    nDCG uses 11 bins ([0,0.1) .. [0.9,1.0) plus an exact-1 bin); inner
    product uses 20 equal bins over [-1, 1].
    """
    if not records or not originals:
        raise EmptyInput("no records or originals")
    best: dict[str, ReformulationRecord] = {}
    for rec in records:
        cur = best.get(rec.query_id)
        if cur is None or (rec.ndcg_after, rec.ip_after) > (cur.ndcg_after, cur.ip_after):
            best[rec.query_id] = rec
    ndcg_before = [0] * 11
    ndcg_after = [0] * 11
    ip_before = [0] * 20
    ip_after = [0] * 20
    for ndcg, ip in originals:
        ndcg_before[_ndcg_bin(ndcg)] += 1
        ip_before[_ip_bin(ip)] += 1
    for rec in best.values():
        ndcg_after[_ndcg_bin(rec.ndcg_after)] += 1
        ip_after[_ip_bin(rec.ip_after)] += 1
    return {
        "ndcg": {
            "bins": list(_NDCG_BIN_LABELS),
            "original": ndcg_before,
            "best_reformulation": ndcg_after,
        },
        "inner_product": {
            "bins": list(_IP_BIN_LABELS),
            "original": ip_before,
            "best_reformulation": ip_after,
        },
    }
