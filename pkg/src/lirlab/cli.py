"""Command-line entry points for the full pipeline.

Exit codes: 0 success, 1 usage error, 2 data/domain error. Domain errors are
printed to stderr as ``error: <Code>: <message>``. ``--seed`` falls back to
the LIRLAB_SEED environment variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .corpus import Query, build_index, read_corpus, save_index
from .decoder import DecoderConfig, decode
from .embedding import EncoderConfig, encode, normalize
from .errors import LirlabError
from .pipeline import LabContext, load_context, resolve_method, run_suggestion_eval, suggest_for_query
from .suggesters import SamplingConfig
from .traversal import (
    dataset_histograms,
    generate_dataset,
    traverse_and_decode,
    write_dataset_jsonl,
    write_training_view,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: Usage: {message}", file=sys.stderr)
        raise SystemExit(1)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LIRLAB_SEED")
    return int(env) if env else 0


def _dec_cfg(args, seed: int) -> DecoderConfig:
    return DecoderConfig(
        beam_width=args.beam_width,
        max_len=args.max_len,
        shortlist_size=args.shortlist,
        seed=seed,
    )


def _add_decoder_flags(p) -> None:
    p.add_argument("--beam-width", type=int, default=16)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--shortlist", type=int, default=256)


def _add_context_flags(p, queries=False, qrels=False) -> None:
    p.add_argument("--index", required=True, help="index file built by `index`")
    p.add_argument("--corpus", required=True, help="corpus JSONL (texts + vocabulary)")
    if queries:
        p.add_argument("--queries", help="queries TSV")
    if qrels:
        p.add_argument("--qrels", help="TREC qrels")


def _context(args) -> LabContext:
    return load_context(
        corpus_path=args.corpus,
        index_path=args.index,
        queries_path=getattr(args, "queries", None),
        qrels_path=getattr(args, "qrels", None),
    )


def cmd_ingest(args) -> int:
    docs = read_corpus(args.corpus)
    total_tokens = sum(len(d.text.split()) for d in docs)
    print(
        json.dumps(
            {"documents": len(docs), "whitespace_tokens": total_tokens},
            separators=(",", ":"),
        )
    )
    return 0


def cmd_index(args) -> int:
    cfg = EncoderConfig(dim=args.dim, seed=_seed(args), ngram_order=args.ngram_order)
    index = build_index(read_corpus(args.corpus), cfg)
    save_index(index, args.out)
    print(
        json.dumps(
            {"documents": len(index.doc_ids), "dim": index.dim, "out": str(args.out)},
            separators=(",", ":"),
        )
    )
    return 0


def cmd_decode(args) -> int:
    ctx = _context(args)
    if args.text is not None:
        z = encode(args.text, ctx.encoder_cfg)
    elif args.doc_id is not None:
        z = normalize(ctx.index.row(args.doc_id))
    else:
        raw = np.fromfile(args.vector_file, dtype="<f4")
        z = normalize(raw.astype(np.float64))
    decoding = decode(z, ctx.vocab, _dec_cfg(args, _seed(args)))
    print(
        json.dumps(
            {"text": decoding.text, "reencode_similarity": decoding.reencode_similarity},
            separators=(",", ":"),
        )
    )
    return 0


def cmd_traverse(args) -> int:
    ctx = _context(args)
    query = ctx.queries_by_id.get(args.query_id)
    if query is None:
        raise LirlabError(f"unknown query_id {args.query_id!r}")
    gold = args.doc_id
    if gold is None and ctx.qrels is not None:
        gold = ctx.qrels.gold_for(args.query_id)
    if gold is None:
        raise LirlabError("need --doc-id or qrels with a gold for the query")
    grades = ctx.qrels.grades_for(args.query_id) if ctx.qrels else {gold: 1}
    steps = traverse_and_decode(
        query,
        gold,
        args.steps,
        ctx.index,
        ctx.docs_by_id,
        ctx.vocab,
        _dec_cfg(args, _seed(args)),
        grades,
    )
    print(
        json.dumps(
            [
                {
                    "kappa": s.kappa,
                    "text": s.decoding.text,
                    "ndcg_at_10": s.ndcg_at_10,
                    "ip_with_gold": s.ip_with_gold,
                }
                for s in steps
            ],
            indent=2,
        )
    )
    return 0


def cmd_gen_dataset(args) -> int:
    ctx = _context(args)
    if ctx.qrels is None or not ctx.queries:
        raise LirlabError("gen-dataset requires --queries and --qrels")
    seed = _seed(args)
    result = generate_dataset(
        ctx.queries,
        ctx.qrels,
        ctx.index,
        ctx.docs_by_id,
        ctx.vocab,
        _dec_cfg(args, seed),
        k=args.k,
        seed=seed,
    )
    write_dataset_jsonl(result.records, args.out)
    if args.training_view:
        write_training_view(
            result.records, ctx.queries_by_id, ctx.index, ctx.docs_by_id, args.training_view
        )
    if args.histograms and result.records:
        originals = {}
        for rec in result.records:
            originals[rec.query_id] = (rec.ndcg_before, rec.ip_before)
        hist = dataset_histograms(result.records, list(originals.values()))
        Path(args.histograms).write_text(json.dumps(hist, indent=2))
    summary = {
        "queries_processed": result.stats.queries_processed,
        "queries_skipped_missing_gold": result.stats.queries_skipped_missing_gold,
        "queries_with_optimal": result.stats.queries_with_optimal,
        "fraction_with_optimal": result.stats.fraction_with_optimal,
        "records": result.stats.records_emitted,
        "out": str(args.out),
    }
    print(json.dumps(summary, separators=(",", ":")))
    return 0


def cmd_suggest(args) -> int:
    ctx = _context(args)
    query_id = ctx.query_id_for_text(args.query) or "adhoc"
    query = Query(query_id, args.query)
    sset = suggest_for_query(
        ctx,
        args.method,
        query,
        seed=_seed(args),
        dec_cfg=_dec_cfg(args, _seed(args)),
        sampling_cfg=SamplingConfig(epsilon=args.epsilon),
        with_metrics=ctx.qrels is not None and query_id != "adhoc",
    )
    out = sset.to_dict()
    out["suggestions"] = out["suggestions"][: args.n]
    print(json.dumps(out, indent=2))
    return 0


def cmd_eval(args) -> int:
    ctx = _context(args)
    methods = [resolve_method(m) for m in args.methods.split(",")]
    report = run_suggestion_eval(
        ctx,
        methods=methods,
        seed=_seed(args),
        n_boot=args.bootstrap,
        limit=args.limit,
        dec_cfg=_dec_cfg(args, _seed(args)),
    )
    Path(args.out).write_text(report.to_json())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    print(
        json.dumps(
            {
                "queries": report.num_queries,
                "original_mean_ndcg": report.original_mean_ndcg,
                "methods": {
                    m.method: m.best_of_k[max(report.ks)].mean for m in report.methods
                },
                "out": str(args.out),
            },
            separators=(",", ":"),
        )
    )
    return 0


def cmd_serve(args) -> int:
    from .service import serve_forever

    ctx = _context(args)
    serve_forever(ctx, port=args.port, seed=_seed(args), ui_dir=args.ui_dir)
    return 0


def cmd_report(args) -> int:
    data = json.loads(Path(args.report).read_text())
    ks = data["ks"]
    header = ["method"] + [f"best-of-{k}" for k in ks] + ["self-bleu", "ppl"]
    rows = [header]
    orig = data["original"]
    ppl = orig.get("perplexity")
    rows.append(
        ["original"]
        + [f"{orig['mean_ndcg']:.3f}"] * len(ks)
        + ["-", f"{ppl:.1f}" if ppl is not None else "-"]
    )
    for m in data["methods"]:
        row = [m["method"]]
        for k in ks:
            stats = m["best_of_k"][str(k)]
            row.append(f"{stats['mean']:.3f} ±{stats['std']:.3f}")
        row.append("-" if m["self_bleu"] is None else f"{m['self_bleu']:.1f}")
        row.append("-" if m["perplexity"] is None else f"{m['perplexity']:.1f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    for r in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(r, widths)))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="lirlab", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="global seed")
    # accept --seed before or after the subcommand (SUPPRESS keeps the
    # subparser from clobbering a value parsed at the top level)
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub = parser.add_subparsers(
        dest="command", required=True, parser_class=_Parser
    )

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[seed_parent], **kwargs)

    p = add_parser("ingest", help="validate a corpus file")
    p.add_argument("--corpus", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = add_parser("index", help="encode a corpus into an index file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--ngram-order", type=int, default=3)
    p.set_defaults(fn=cmd_index)

    p = add_parser("decode", help="decode a latent vector to a query")
    _add_context_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text", help="decode the encoding of this text")
    src.add_argument("--doc-id", help="decode a document's stored embedding")
    src.add_argument("--vector-file", help="raw float32 little-endian vector")
    _add_decoder_flags(p)
    p.set_defaults(fn=cmd_decode)

    p = add_parser("traverse", help="decode along the query->gold line")
    _add_context_flags(p, queries=True, qrels=True)
    p.add_argument("--query-id", required=True)
    p.add_argument("--doc-id", help="traversal target (default: gold from qrels)")
    p.add_argument("--steps", type=int, default=20)
    _add_decoder_flags(p)
    p.set_defaults(fn=cmd_traverse)

    p = add_parser("gen-dataset", help="generate successful reformulations")
    _add_context_flags(p, queries=True, qrels=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--out", required=True)
    p.add_argument("--training-view", help="also write query/context/target JSONL")
    p.add_argument("--histograms", help="also write before/after histogram JSON")
    _add_decoder_flags(p)
    p.set_defaults(fn=cmd_gen_dataset)

    p = add_parser("suggest", help="suggest query rewrites")
    _add_context_flags(p, queries=True, qrels=True)
    p.add_argument("--method", required=True, help="rm3|sampling|prf|plain")
    p.add_argument("--query", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--epsilon", type=float, default=0.05)
    _add_decoder_flags(p)
    p.set_defaults(fn=cmd_suggest)

    p = add_parser("eval", help="benchmark suggestion methods")
    _add_context_flags(p, queries=True, qrels=True)
    p.add_argument("--methods", default="rm3,sampling,prf,plain")
    p.add_argument("--out", required=True)
    p.add_argument("--csv", help="also write the method x best-of-k CSV")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--limit", type=int, help="evaluate only the first N queries")
    _add_decoder_flags(p)
    p.set_defaults(fn=cmd_eval)

    p = add_parser("serve", help="serve the HTTP JSON API")
    _add_context_flags(p, queries=True, qrels=True)
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--ui-dir", help="static assets directory for the browser UI")
    p.set_defaults(fn=cmd_serve)

    p = add_parser("report", help="print an eval report as a table")
    p.add_argument("--report", required=True)
    p.set_defaults(fn=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except LirlabError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: FileNotFound: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
