"""Evaluation computations: nDCG@k, best-of-k, Self-BLEU, perplexity, reports.

nDCG uses the graded-gain form (2^grade - 1) / log2(rank + 1); with a single
binary gold this is 1/log2(r + 1) for the gold at rank r, i.e. the familiar
1.00 / 0.63 / 0.50 / 0.43 / 0.39 / 0.36 sequence at ranks 1..6.

The fluency proxy is an add-delta trigram model trained on the corpus; its
absolute perplexities are not comparable to neural LM perplexities, but the
relative ordering between suggestion methods is what reports consume.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import SearchResult
from .embedding import tokenize
from .errors import EmptyInput, EmptyText, TooFewSuggestions

DEFAULT_KS = (1, 3, 5, 10)


def ndcg_at_k(result: SearchResult, grades: Mapping[str, int], k: int = 10) -> float:
    """Normalized DCG of the top-k ranking against a doc_id -> grade map.

    Unjudged documents count as grade 0; returns 0 when nothing is judged.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    dcg = 0.0
    for i, (doc_id, _) in enumerate(result.entries[:k], start=1):
        g = grades.get(doc_id, 0)
        if g > 0:
            dcg += (2.0**g - 1.0) / math.log2(i + 1)
    ideal = sorted((g for g in grades.values() if g > 0), reverse=True)[:k]
    idcg = sum(
        (2.0**g - 1.0) / math.log2(i + 1) for i, g in enumerate(ideal, start=1)
    )
    if idcg == 0.0:
        return 0.0
    return dcg / idcg


def best_of_k(
    suggestion_ndcgs: Sequence[float],
    original_ndcg: float,
    ks: Sequence[int] = DEFAULT_KS,
) -> dict[int, float]:
    """Max of the original score and the first k suggestion scores, per k."""
    out = {}
    for k in ks:
        pool = [original_ndcg] + list(suggestion_ndcgs[:k])
        out[k] = max(pool)
    return out


# --- Self-BLEU ---------------------------------------------------------------

_BLEU_EPS = 1e-3  # numerator floor for zero n-gram matches (method-1 style)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    max_order: int = 4,
) -> float:
    """BLEU in [0, 1] with uniform weights over the orders the candidate has.

    Zero-match orders get an epsilon numerator instead of zeroing the whole
    geometric mean; orders longer than the candidate are dropped from the
    mean (so identical short texts still score 1.0). Brevity penalty uses
    the reference length closest to the candidate length, shorter on ties.
    """
    c = len(candidate)
    if c == 0 or not references:
        return 0.0
    log_precisions = []
    for n in range(1, max_order + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        if total == 0:
            continue
        max_ref: Counter = Counter()
        for ref in references:
            for gram, cnt in _ngram_counts(ref, n).items():
                if cnt > max_ref[gram]:
                    max_ref[gram] = cnt
        clipped = sum(min(cnt, max_ref[gram]) for gram, cnt in cand_counts.items())
        p = clipped / total if clipped > 0 else _BLEU_EPS / total
        log_precisions.append(math.log(p))
    if not log_precisions:
        return 0.0
    geo_mean = math.exp(sum(log_precisions) / len(log_precisions))
    r = min((len(ref) for ref in references), key=lambda rl: (abs(rl - c), rl))
    bp = 1.0 if c > r else math.exp(1.0 - r / c) if c > 0 else 0.0
    return bp * geo_mean


def self_bleu(texts: Sequence[str]) -> float:
    """Mean BLEU of each text against the remaining texts, scaled to [0, 100].

    High values mean the texts repeat each other; diverse suggestion sets
    score low. Permutation invariant. Needs at least two texts.
    """
    if len(texts) < 2:
        raise TooFewSuggestions(f"need >= 2 texts, got {len(texts)}")
    token_lists = [tokenize(t) for t in texts]
    scores = []
    for i, cand in enumerate(token_lists):
        refs = [toks for j, toks in enumerate(token_lists) if j != i]
        scores.append(sentence_bleu(cand, refs))
    return 100.0 * float(np.mean(scores))


# --- n-gram language model ----------------------------------------------------

UNK = "<unk>"
_BOS = "<s>"


class NGramLM:
    """Add-delta smoothed n-gram model over the module tokenizer's tokens.

    The distribution for every context is over ``vocabulary`` (which always
    contains the unknown symbol), so probabilities sum to one and an
    untrained model is exactly uniform with perplexity ``len(vocabulary)``.
    """

    def __init__(self, order: int = 3, delta: float = 0.1):
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if not 0.0 < delta <= 1.0:
            raise ValueError(f"delta must be in (0, 1], got {delta}")
        self.order = order
        self.delta = delta
        self.vocabulary: set[str] = {UNK}
        self._ngrams: Counter = Counter()
        self._contexts: Counter = Counter()

    def fit(
        self, texts: Iterable[str], vocabulary: Iterable[str] | None = None
    ) -> "NGramLM":
        token_lists = [tokenize(t) for t in texts]
        for toks in token_lists:
            self.vocabulary.update(toks)
        if vocabulary is not None:
            self.vocabulary.update(vocabulary)
        pad = (_BOS,) * (self.order - 1)
        for toks in token_lists:
            padded = pad + tuple(toks)
            for i in range(len(toks)):
                gram = padded[i : i + self.order]
                self._ngrams[gram] += 1
                self._contexts[gram[:-1]] += 1
        return self

    def _map(self, token: str) -> str:
        return token if token in self.vocabulary else UNK

    def prob(self, token: str, context: Sequence[str]) -> float:
        token = self._map(token)
        ctx = tuple(t if t == _BOS else self._map(t) for t in context)[
            -(self.order - 1) :
        ] if self.order > 1 else ()
        v = len(self.vocabulary)
        count = self._ngrams[ctx + (token,)]
        ctx_total = self._contexts[ctx]
        return (count + self.delta) / (ctx_total + self.delta * v)

    def log_likelihood(self, text: str) -> tuple[float, int]:
        """Sum of log P(token | context) and the token count."""
        tokens = tokenize(text)
        if not tokens:
            raise EmptyText(f"no tokens in {text!r}")
        pad = [_BOS] * (self.order - 1)
        seq = pad + tokens
        total = 0.0
        for i in range(len(tokens)):
            total += math.log(self.prob(seq[i + self.order - 1], seq[i : i + self.order - 1]))
        return total, len(tokens)

    def perplexity_of(self, text: str) -> float:
        ll, n = self.log_likelihood(text)
        return math.exp(-ll / n)


def perplexity(texts: Sequence[str], lm: NGramLM) -> float:
    """Mean per-token perplexity over texts."""
    if not texts:
        raise EmptyInput("no texts")
    return float(np.mean([lm.perplexity_of(t) for t in texts]))


# --- bootstrap + report -------------------------------------------------------


@dataclass(frozen=True)
class BootstrapStat:
    mean: float
    std: float
    lo: float  # 2.5th percentile
    hi: float  # 97.5th percentile


def bootstrap_best_of_k(
    per_query_ndcgs: Sequence[Sequence[float]],
    per_query_original: Sequence[float],
    ks: Sequence[int] = DEFAULT_KS,
    n_boot: int = 1000,
    seed: int = 0,
) -> dict[int, BootstrapStat]:
    """Best-of-k means with bootstrap spread over suggestion resamples.

    Protocol (fixed for reproducibility): each iteration redraws, per query,
    len(suggestions) suggestions with replacement (queries without
    suggestions consume no randomness), recomputes the per-query best-of-k
    against the original score, and averages over queries. Reported mean is
    the plain un-resampled estimate; std and the 2.5/97.5 percentiles are
    over the bootstrap iterations.
    """
    if len(per_query_ndcgs) != len(per_query_original):
        raise ValueError("per-query lists differ in length")
    nq = len(per_query_original)
    if nq == 0:
        raise EmptyInput("no queries")
    point = {
        k: float(
            np.mean(
                [
                    best_of_k(per_query_ndcgs[i], per_query_original[i], [k])[k]
                    for i in range(nq)
                ]
            )
        )
        for k in ks
    }
    rng = np.random.default_rng(seed)
    samples = {k: np.empty(n_boot) for k in ks}
    for b in range(n_boot):
        tot = {k: 0.0 for k in ks}
        for i in range(nq):
            sugg = per_query_ndcgs[i]
            if len(sugg) > 0:
                draw = rng.integers(0, len(sugg), size=len(sugg))
                resampled = [sugg[j] for j in draw]
            else:
                resampled = []
            bo = best_of_k(resampled, per_query_original[i], ks)
            for k in ks:
                tot[k] += bo[k]
        for k in ks:
            samples[k][b] = tot[k] / nq
    return {
        k: BootstrapStat(
            mean=point[k],
            std=float(np.std(samples[k])),
            lo=float(np.percentile(samples[k], 2.5)),
            hi=float(np.percentile(samples[k], 97.5)),
        )
        for k in ks
    }


@dataclass
class MethodEval:
    method: str
    best_of_k: dict[int, BootstrapStat]
    self_bleu: float | None
    perplexity: float | None


@dataclass
class EvalReport:
    num_queries: int
    ks: tuple[int, ...]
    original_mean_ndcg: float
    original_perplexity: float | None
    methods: list[MethodEval] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "num_queries": self.num_queries,
            "ks": list(self.ks),
            "original": {
                "mean_ndcg": self.original_mean_ndcg,
                "perplexity": self.original_perplexity,
            },
            "methods": [
                {
                    "method": m.method,
                    "best_of_k": {
                        str(k): {
                            "mean": s.mean,
                            "std": s.std,
                            "p2.5": s.lo,
                            "p97.5": s.hi,
                        }
                        for k, s in sorted(m.best_of_k.items())
                    },
                    "self_bleu": m.self_bleu,
                    "perplexity": m.perplexity,
                }
                for m in self.methods
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def to_csv(self) -> str:
        """method x best-of-k table with std, plus diversity/fluency columns."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        header = ["method"]
        for k in self.ks:
            header += [f"best_of_{k}", f"best_of_{k}_std"]
        header += ["self_bleu", "perplexity"]
        writer.writerow(header)
        row = ["original"]
        for _ in self.ks:
            row += [f"{self.original_mean_ndcg:.3f}", ""]
        row += ["", "" if self.original_perplexity is None else f"{self.original_perplexity:.1f}"]
        writer.writerow(row)
        for m in self.methods:
            row = [m.method]
            for k in self.ks:
                s = m.best_of_k[k]
                row += [f"{s.mean:.3f}", f"{s.std:.3f}"]
            row += [
                "" if m.self_bleu is None else f"{m.self_bleu:.1f}",
                "" if m.perplexity is None else f"{m.perplexity:.1f}",
            ]
            writer.writerow(row)
        return buf.getvalue()


def assemble_report(
    per_method_ndcgs: Mapping[str, Sequence[Sequence[float]]],
    per_method_texts: Mapping[str, Sequence[Sequence[str]]],
    original_ndcgs: Sequence[float],
    original_texts: Sequence[str],
    lm: NGramLM | None,
    ks: Sequence[int] = DEFAULT_KS,
    n_boot: int = 1000,
    seed: int = 0,
) -> EvalReport:
    """Aggregate per-query suggestion metrics into one report.

    ``per_method_ndcgs[m][i]`` are suggestion nDCG@10s for query i in list
    order; ``per_method_texts`` the matching suggestion texts. Self-BLEU
    averages over queries with at least two suggestions; perplexity over
    all suggestion texts pooled.
    """
    report = EvalReport(
        num_queries=len(original_ndcgs),
        ks=tuple(ks),
        original_mean_ndcg=float(np.mean(original_ndcgs)),
        original_perplexity=(
            perplexity(list(original_texts), lm) if lm is not None else None
        ),
    )
    for method in per_method_ndcgs:
        ndcgs = per_method_ndcgs[method]
        texts = per_method_texts[method]
        boot = bootstrap_best_of_k(ndcgs, original_ndcgs, ks, n_boot, seed)
        bleus = [self_bleu(ts) for ts in texts if len(ts) >= 2]
        pooled = [t for ts in texts for t in ts]
        report.methods.append(
            MethodEval(
                method=method,
                best_of_k=boot,
                self_bleu=float(np.mean(bleus)) if bleus else None,
                perplexity=(
                    perplexity(pooled, lm) if lm is not None and pooled else None
                ),
            )
        )
    return report
