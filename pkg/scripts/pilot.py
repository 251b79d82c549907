#!/usr/bin/env python3
"""Pilot run over the shipped corpora: records the regression floors and
freezes golden outputs.

Writes:

* data/pilot/pilot_metrics.json - measured values backing every frozen
  floor in the acceptance suite (round-trip means, paragraph->query success
  rates, traversal trend, dataset stats, suggester best-of-10 ordering);
* tests/golden/*.json - first-run decoder/suggester/traversal outputs frozen
  as goldens, plus the fixture index checksum and dataset digest.

Rerun after intentionally changing the encoder, decoder, or fixtures, then
review the diff before committing.

Usage: python scripts/pilot.py
"""

import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from lirlab import (  # noqa: E402
    DecoderConfig,
    EncoderConfig,
    decode,
    decode_samples,
    encode,
    save_index,
    search,
)
from lirlab.decoder import (  # noqa: E402
    paragraph_to_query_eval,
    round_trip_eval,
)
from lirlab.embedding import normalize  # noqa: E402
from lirlab.metrics import best_of_k, ndcg_at_k  # noqa: E402
from lirlab.pipeline import load_context, suggest_for_query  # noqa: E402
from lirlab.suggesters import METHODS  # noqa: E402
from lirlab.traversal import (  # noqa: E402
    dataset_histograms,
    generate_dataset,
    traverse_and_decode,
    write_dataset_jsonl,
)

GOLDEN = ROOT / "tests" / "golden"
PILOT_OUT = ROOT / "data" / "pilot"


def load(name: str):
    d = ROOT / "data" / name
    return load_context(
        corpus_path=d / "corpus.jsonl",
        queries_path=d / "queries.tsv",
        qrels_path=d / "qrels.txt",
        encoder_cfg=EncoderConfig.from_json((d / "encoder.json").read_text()),
    )


def zero_ndcg_queries(ctx, limit=100):
    out = []
    for q in ctx.queries:
        grades = ctx.qrels.grades_for(q.query_id)
        emb = encode(q.text, ctx.encoder_cfg)
        if ndcg_at_k(search(ctx.index, emb, 10), grades, 10) == 0.0:
            out.append(q)
        if len(out) == limit:
            break
    return out


def main() -> int:
    t_start = time.time()
    GOLDEN.mkdir(parents=True, exist_ok=True)
    PILOT_OUT.mkdir(parents=True, exist_ok=True)
    pilot: dict = {"fixture": {}, "sample": {}}

    print("loading fixture ...")
    fx = load("fixture")
    dec_cfg = DecoderConfig()

    # --- fixture index checksum golden
    idx_path = PILOT_OUT / "fixture.idx"
    save_index(fx.index, idx_path)
    (GOLDEN / "fixture_index.sha256").write_text(
        hashlib.sha256(idx_path.read_bytes()).hexdigest() + "\n"
    )
    idx_path.unlink()

    # --- round trip: full decoder vs greedy baseline
    print("round trip (beam + greedy) ...")
    f1, cos = round_trip_eval(fx.queries, fx.vocab, fx.encoder_cfg, dec_cfg)
    greedy_cfg = DecoderConfig(beam_width=1, shortlist_size=1)
    gf1, gcos = round_trip_eval(fx.queries, fx.vocab, fx.encoder_cfg, greedy_cfg)
    pilot["fixture"]["round_trip"] = {
        "queries": len(fx.queries),
        "mean_f1": f1,
        "mean_cosine": cos,
        "greedy_mean_f1": gf1,
        "greedy_mean_cosine": gcos,
    }

    # --- paragraph -> query
    print("paragraph -> query ...")
    p2q = paragraph_to_query_eval(fx.qrels, fx.docs_by_id, fx.index, fx.vocab, dec_cfg)
    pilot["fixture"]["paragraph_to_query"] = {f"success_at_{k}": v for k, v in p2q.items()}

    # --- traversal trend over 100 zero-nDCG queries
    print("traversal trend ...")
    zeros = zero_ndcg_queries(fx, 100)
    first_steps, last_steps, reached = [], [], 0
    for q in zeros:
        gold = fx.qrels.gold_for(q.query_id)
        steps = traverse_and_decode(
            q, gold, 20, fx.index, fx.docs_by_id, fx.vocab, dec_cfg,
            fx.qrels.grades_for(q.query_id),
        )
        first_steps.append(steps[0].ndcg_at_10)
        last_steps.append(steps[-1].ndcg_at_10)
        reached += any(s.ndcg_at_10 == 1.0 for s in steps)
    pilot["fixture"]["traversal_trend"] = {
        "queries": len(zeros),
        "k": 20,
        "mean_ndcg_kappa_1": float(np.mean(first_steps)),
        "mean_ndcg_kappa_k": float(np.mean(last_steps)),
        "gap": float(np.mean(last_steps) - np.mean(first_steps)),
        "fraction_reaching_ndcg_1": reached / len(zeros),
    }

    # --- suggester best-of-10 ordering (seeded, all queries)
    print("suggesters ...")
    bo10: dict[str, float] = {}
    for method in METHODS:
        vals = []
        for q in fx.queries:
            grades = fx.qrels.grades_for(q.query_id)
            orig = ndcg_at_k(search(fx.index, encode(q.text, fx.encoder_cfg), 10), grades, 10)
            sset = suggest_for_query(fx, method, q, seed=0, dec_cfg=dec_cfg)
            ndcgs = [s.ndcg for s in sset.suggestions if s.ndcg is not None]
            vals.append(best_of_k(ndcgs, orig, ks=(10,))[10])
        bo10[method] = float(np.mean(vals))
    pilot["fixture"]["best_of_10_mean_ndcg"] = bo10

    # --- goldens from the fixture (first run, inspected, frozen)
    print("freezing decoder goldens ...")
    target_doc = "f0007"
    z_doc = normalize(fx.index.row(target_doc))
    golden_decode = decode(z_doc, fx.vocab, dec_cfg)
    q17 = fx.queries_by_id["q017"]
    gold17 = fx.qrels.gold_for(q17.query_id)
    steps17 = traverse_and_decode(
        q17, gold17, 10, fx.index, fx.docs_by_id, fx.vocab, dec_cfg,
        fx.qrels.grades_for(q17.query_id),
    )
    samples_cfg = DecoderConfig(sample_temperature=0.1, num_samples=10, seed=7)
    golden_samples = decode_samples(encode(q17.text, fx.encoder_cfg), fx.vocab, samples_cfg)
    (GOLDEN / "decode_fixture.json").write_text(
        json.dumps(
            {
                "doc_id": target_doc,
                "decoded_text": golden_decode.text,
                "reencode_similarity": golden_decode.reencode_similarity,
                "samples_query_id": "q017",
                "samples_seed": 7,
                "samples_temperature": 0.1,
                "sample_texts": [d.text for d in golden_samples],
                "traverse_query_id": "q017",
                "traverse_doc_id": gold17,
                "traverse_steps": [
                    {
                        "kappa": s.kappa,
                        "text": s.decoding.text,
                        "ndcg_at_10": s.ndcg_at_10,
                        "ip_with_gold": s.ip_with_gold,
                    }
                    for s in steps17
                ],
            },
            indent=2,
        )
    )

    print("freezing sampling_qd golden ...")
    sset = suggest_for_query(fx, "sampling_qd", fx.queries_by_id["q003"], seed=3, dec_cfg=dec_cfg)
    (GOLDEN / "sampling_qd_fixture.json").write_text(
        json.dumps(
            {"query_id": "q003", "seed": 3, "texts": sset.texts()}, indent=2
        )
    )

    # --- sample corpus: dataset generation
    print("loading sample + gen-dataset (seed 42, k=20) ...")
    sm = load("sample")
    result = generate_dataset(
        sm.queries, sm.qrels, sm.index, sm.docs_by_id, sm.vocab, dec_cfg, k=20, seed=42
    )
    ds_path = PILOT_OUT / "sample_dataset.jsonl"
    write_dataset_jsonl(result.records, ds_path)
    digest = hashlib.sha256(ds_path.read_bytes()).hexdigest()
    ds_path.unlink()
    (GOLDEN / "gen_dataset_sample.json").write_text(
        json.dumps(
            {
                "seed": 42,
                "k": 20,
                "records": result.stats.records_emitted,
                "sha256": digest,
            },
            indent=2,
        )
    )
    originals = {}
    for rec in result.records:
        originals.setdefault(rec.query_id, (rec.ndcg_before, rec.ip_before))
    hist = dataset_histograms(result.records, list(originals.values()))
    (GOLDEN / "histograms_sample.json").write_text(json.dumps(hist, indent=2))
    pilot["sample"]["gen_dataset"] = {
        "seed": 42,
        "k": 20,
        "queries_processed": result.stats.queries_processed,
        "queries_with_optimal": result.stats.queries_with_optimal,
        "fraction_with_optimal": result.stats.fraction_with_optimal,
        "records": result.stats.records_emitted,
        "sha256": digest,
    }

    pilot["elapsed_seconds"] = round(time.time() - t_start, 1)
    (PILOT_OUT / "pilot_metrics.json").write_text(json.dumps(pilot, indent=2))
    print(json.dumps(pilot, indent=2))
    print(f"pilot done in {pilot['elapsed_seconds']}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
