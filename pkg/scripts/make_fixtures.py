#!/usr/bin/env python3
"""Generate the synthetic corpora shipped under data/.

Two corpora, both fully seeded:

* data/fixture - 1000 docs / 200 queries, used by the regression and
  acceptance suites;
* data/sample - 500 docs / 200 queries, used by the end-to-end CLI smoke
  run and the dataset-generation goldens.

Documents are built from synthetic pronounceable words organized by topic.
Every document carries a couple of document-specific "entity" words repeated
a few times, so documents are separable under the hash encoder while topic
words keep same-topic documents confusable. Queries come in two flavours:
"specific" ones mention an entity of their gold document; "ambiguous" ones
use only topic vocabulary and are rejection-sampled until the gold paragraph
falls outside the top-10 for the original query (nDCG@10 of 0), which the
traversal experiments rely on.

Usage:
    python scripts/make_fixtures.py [--out-root data]
"""

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from lirlab import Document, EncoderConfig, build_index, encode, rank_of  # noqa: E402
from lirlab.stopwords import STOPWORDS  # noqa: E402

CONSONANTS = list("bcdfghjklmnprstvz")
VOWELS = list("aeiou")

FILL_STOPWORDS = [
    "the", "of", "and", "in", "to", "a", "is", "for", "on", "with",
    "as", "by", "at", "from", "that", "this", "are", "was", "be", "or",
]


@dataclass
class CorpusSpec:
    name: str
    seed: int
    n_docs: int
    n_topics: int
    n_queries: int
    n_ambiguous: int  # queries rejection-sampled to original nDCG@10 = 0
    encoder_seed: int
    dim: int = 256
    topic_vocab: int = 24
    common_vocab: int = 120
    entities_per_doc: int = 2
    entity_repeats: int = 3


FIXTURE = CorpusSpec(
    name="fixture",
    seed=42,
    n_docs=1000,
    n_topics=40,
    n_queries=200,
    n_ambiguous=120,
    encoder_seed=7,
)

SAMPLE = CorpusSpec(
    name="sample",
    seed=1042,
    n_docs=500,
    n_topics=25,
    n_queries=200,
    n_ambiguous=120,
    encoder_seed=7,
)


def make_word(rng: np.random.Generator, syllables: int) -> str:
    parts = []
    for _ in range(syllables):
        parts.append(str(rng.choice(CONSONANTS)) + str(rng.choice(VOWELS)))
    if rng.random() < 0.4:
        parts.append(str(rng.choice(CONSONANTS)))
    return "".join(parts)


def make_word_pool(rng: np.random.Generator, count: int, syllables: int) -> list[str]:
    pool: list[str] = []
    seen = set(STOPWORDS)
    while len(pool) < count:
        w = make_word(rng, syllables)
        if w not in seen:
            seen.add(w)
            pool.append(w)
    return pool


def build_corpus(spec: CorpusSpec):
    rng = np.random.default_rng(spec.seed)
    common = make_word_pool(rng, spec.common_vocab, 2)
    topics = [
        make_word_pool(rng, spec.topic_vocab, 3) for _ in range(spec.n_topics)
    ]
    entity_pool = make_word_pool(rng, spec.n_docs * spec.entities_per_doc, 4)

    docs: list[Document] = []
    doc_meta: list[dict] = []
    width = len(str(spec.n_docs))
    for i in range(spec.n_docs):
        topic_id = i % spec.n_topics
        topic_words = topics[topic_id]
        focus = list(rng.choice(topic_words, size=8, replace=False))
        entities = entity_pool[
            i * spec.entities_per_doc : (i + 1) * spec.entities_per_doc
        ]
        length = int(rng.integers(30, 56))
        tokens: list[str] = []
        for ent in entities:
            tokens.extend([ent] * spec.entity_repeats)
        while len(tokens) < length:
            r = rng.random()
            if r < 0.30:
                tokens.append(str(rng.choice(FILL_STOPWORDS)))
            elif r < 0.45:
                tokens.append(str(rng.choice(common)))
            elif r < 0.75:
                tokens.append(str(rng.choice(focus)))
            else:
                tokens.append(str(rng.choice(topic_words)))
        rng.shuffle(tokens)
        doc_id = f"{spec.name[0]}{i + 1:0{width}d}"
        title = " ".join(focus[:3]) if rng.random() < 0.5 else None
        docs.append(Document(doc_id, " ".join(tokens), title))
        doc_meta.append(
            {
                "doc_id": doc_id,
                "topic": topic_id,
                "focus": focus,
                "entities": entities,
                "tokens": tokens,
            }
        )
    return docs, doc_meta


def build_queries(spec: CorpusSpec, docs, doc_meta, enc_cfg: EncoderConfig):
    rng = np.random.default_rng(spec.seed + 1)
    index = build_index(docs, enc_cfg)
    queries: list[tuple[str, str]] = []
    qrels_lines: list[str] = []
    gold_ids = rng.choice(len(docs), size=spec.n_queries, replace=False)
    n_made_ambiguous = 0
    for qi, gi in enumerate(gold_ids):
        meta = doc_meta[int(gi)]
        gold_id = meta["doc_id"]
        want_ambiguous = n_made_ambiguous < spec.n_ambiguous
        text = None
        if want_ambiguous:
            # topic-only words; resample until the gold misses the top 10
            topic_tokens = sorted(
                {
                    t
                    for t in meta["tokens"]
                    if t not in meta["entities"] and t not in STOPWORDS
                }
            )
            for _ in range(30):
                n_words = int(rng.integers(3, 5))
                cand_toks = list(
                    rng.choice(topic_tokens, size=min(n_words, len(topic_tokens)), replace=False)
                )
                cand = " ".join(cand_toks)
                rank = rank_of(index, encode(cand, enc_cfg), gold_id, 10)
                if rank is None:
                    text = cand
                    n_made_ambiguous += 1
                    break
        if text is None:
            # specific query: focus words plus one entity
            n_focus = int(rng.integers(2, 4))
            toks = list(rng.choice(meta["focus"], size=n_focus, replace=False))
            toks.append(str(rng.choice(meta["entities"])))
            rng.shuffle(toks)
            text = " ".join(toks)
        qid = f"q{qi + 1:03d}"
        queries.append((qid, text))
        qrels_lines.append(f"{qid} 0 {gold_id} 1")
    return queries, qrels_lines, n_made_ambiguous


def write_corpus(spec: CorpusSpec, out_root: Path) -> None:
    out = out_root / spec.name
    out.mkdir(parents=True, exist_ok=True)
    enc_cfg = EncoderConfig(dim=spec.dim, seed=spec.encoder_seed)
    docs, doc_meta = build_corpus(spec)
    queries, qrels_lines, n_amb = build_queries(spec, docs, doc_meta, enc_cfg)

    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for doc in docs:
            obj = {"doc_id": doc.doc_id, "text": doc.text}
            if doc.title is not None:
                obj["title"] = doc.title
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")
    with open(out / "queries.tsv", "w", encoding="utf-8") as fh:
        for qid, text in queries:
            fh.write(f"{qid}\t{text}\n")
    with open(out / "qrels.txt", "w", encoding="utf-8") as fh:
        fh.write("\n".join(qrels_lines) + "\n")
    (out / "encoder.json").write_text(enc_cfg.to_json())
    print(
        f"{spec.name}: {len(docs)} docs, {len(queries)} queries "
        f"({n_amb} with original nDCG@10 = 0) -> {out}"
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-root", default="data", type=Path)
    args = parser.parse_args()
    for spec in (FIXTURE, SAMPLE):
        write_corpus(spec, args.out_root)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
