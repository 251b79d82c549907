"""Query decoder: maps a latent vector back to a query string.

The decoder inverts the encoder by searching token-bag space. Because the
encoder is linear before normalization, a candidate bag's raw vector is the
sum of per-token raw vectors, so beam search can score every expansion with
a handful of vector operations instead of re-hashing each sequence:

    score(bag) = <raw(bag), z> / ||raw(bag)||

with ``<raw, z>`` and ``||raw||^2`` maintained incrementally (both exact,
since raw coordinates are integers). The encoder is order-invariant, so a
beam is identified with its token *multiset* and rendered in lexicographic
order; duplicate multisets reached along different paths are merged, which
keeps the beam diverse.

Search is restricted to a shortlist of the ``shortlist_size`` vocabulary
tokens best aligned with the target vector. Tokens helpful to the target
score well in isolation under a bag-of-features encoder, so the shortlist
rarely excludes useful words.
"""

from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Document, IndexSnapshot, Qrels, Query, rank_of
from .embedding import (
    EncoderConfig,
    encode,
    inner_product,
    is_normalized,
    token_raw_vector,
    tokenize,
)
from .errors import EmptyVocab, UnknownDocId, UnnormalizedTarget


@dataclass(frozen=True)
class DecoderConfig:
    beam_width: int = 16
    max_len: int = 12
    shortlist_size: int = 256
    sample_temperature: float = 0.0
    seed: int = 0
    num_samples: int = 1

    def __post_init__(self) -> None:
        if not 1 <= self.beam_width <= 1024:
            raise ValueError(f"beam_width out of range: {self.beam_width}")
        if not 1 <= self.max_len <= 64:
            raise ValueError(f"max_len out of range: {self.max_len}")
        if self.shortlist_size < 1:
            raise ValueError("shortlist_size must be >= 1")
        if self.sample_temperature < 0:
            raise ValueError("sample_temperature must be >= 0")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")


@dataclass(frozen=True)
class Decoding:
    """A decoded query plus its re-encoding similarity to the target."""

    text: str
    reencode_similarity: float
    tokens: tuple[str, ...]


class Vocabulary:
    """Token set with precomputed raw vectors, shared across decodes.

    Tokens are stored lexicographically sorted; tokens whose features cancel
    to the zero vector are dropped (they cannot be encoded).
    """

    def __init__(self, tokens: Iterable[str], cfg: EncoderConfig):
        uniq = sorted(set(tokens))
        raws = []
        kept = []
        for tok in uniq:
            vec = token_raw_vector(tok, cfg)
            if float(np.dot(vec, vec)) > 0.0:
                kept.append(tok)
                raws.append(vec)
        self.tokens: list[str] = kept
        self.cfg = cfg
        if kept:
            self.raw = np.vstack(raws)
            self.norms = np.sqrt(np.einsum("ij,ij->i", self.raw, self.raw))
        else:
            self.raw = np.zeros((0, cfg.dim))
            self.norms = np.zeros(0)

    @classmethod
    def from_documents(cls, docs: Iterable[Document], cfg: EncoderConfig) -> "Vocabulary":
        tokens: set[str] = set()
        for doc in docs:
            tokens.update(tokenize(doc.text))
        return cls(tokens, cfg)

    def __len__(self) -> int:
        return len(self.tokens)


def _check_target(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if not is_normalized(z):
        raise UnnormalizedTarget(f"target norm {float(np.linalg.norm(z)):.6f} != 1")
    return z


@dataclass
class _Shortlist:
    """Per-decode scoring tables over the lexicographically ordered shortlist."""

    tokens: list[str]
    raw: np.ndarray  # token raw vectors, one row each
    tdot: np.ndarray  # <raw(token), z>
    tsq: np.ndarray  # ||raw(token)||^2
    gram: np.ndarray  # raw(token_i) . raw(token_j)

    @property
    def size(self) -> int:
        return len(self.tokens)

    def canonical_score(self, bag: tuple[int, ...], z: np.ndarray) -> float:
        """Score recomputed from the bag's raw vector in canonical order.

        Incremental beam scores drift by ULPs depending on the expansion
        path; the canonical score makes exact ties (notably a bag vs. its
        scalar multiples, which encode identically) compare equal, so the
        shorter-then-lexicographic tie-break is actually reachable.
        """
        raw = self.raw[list(bag)].sum(axis=0)
        sq = float(np.dot(raw, raw))
        if sq == 0.0:
            return -np.inf
        return float(np.dot(raw, z)) / np.sqrt(sq)


def _build_shortlist(z: np.ndarray, vocab: Vocabulary, size: int) -> _Shortlist:
    if len(vocab) == 0:
        raise EmptyVocab("vocabulary is empty")
    scores = (vocab.raw @ z) / vocab.norms
    # Stable sort + lexicographically sorted vocab = ties resolved by token.
    order = np.argsort(-scores, kind="stable")[: min(size, len(vocab))]
    picked = sorted(int(i) for i in order)  # back to lexicographic order
    raw = vocab.raw[picked]
    return _Shortlist(
        tokens=[vocab.tokens[i] for i in picked],
        raw=raw,
        tdot=raw @ z,
        tsq=np.einsum("ij,ij->i", raw, raw),
        gram=raw @ raw.T,
    )


def _reduce_bag(bag: tuple[int, ...]) -> tuple[int, ...]:
    """Divide multiplicities by their GCD.

    A bag and its scalar multiples encode to the same unit vector; reducing
    before comparison makes them exactly tied (so the shorter-form tie-break
    applies) instead of letting non-power-of-two scalings win by a ULP.
    """
    counts = Counter(bag)
    g = 0
    for c in counts.values():
        g = math.gcd(g, c)
    if g <= 1:
        return bag
    out: list[int] = []
    for idx in sorted(counts):
        out.extend([idx] * (counts[idx] // g))
    return tuple(out)


class _Best:
    """Tracks the best-scoring bag seen anywhere during the search."""

    def __init__(self) -> None:
        self.score = -np.inf
        self.bag: tuple[int, ...] = ()

    def offer(self, score: float, bag: tuple[int, ...]) -> None:
        if score > self.score or (
            score == self.score
            and (len(bag), bag) < (len(self.bag), self.bag)
        ):
            self.score = score
            self.bag = bag


def _select_candidates(
    scores: np.ndarray,
    bag_of: "dict[int, tuple[int, ...]]",
    make_bag,
    width: int,
) -> list[tuple[int, tuple[int, ...], float]]:
    """Top ``width`` unique bags by (score desc, bag lex asc).

    Walks the score-sorted candidate list group by group so exact float ties
    are broken by bag order, deduplicating bags reached via different paths.
    """
    order = np.argsort(-scores, kind="stable")
    picked: list[tuple[int, tuple[int, ...], float]] = []
    seen: set[tuple[int, ...]] = set()
    i, n = 0, len(order)
    while i < n and len(picked) < width:
        s = scores[order[i]]
        if s == -np.inf:
            break
        j = i
        while j < n and scores[order[j]] == s:
            j += 1
        group = [int(c) for c in order[i:j]]
        for c in group:
            if c not in bag_of:
                bag_of[c] = make_bag(c)
        group.sort(key=lambda c: bag_of[c])
        for c in group:
            bag = bag_of[c]
            if bag in seen:
                continue
            seen.add(bag)
            picked.append((c, bag, float(s)))
            if len(picked) == width:
                break
        i = j
    return picked


def _beam_search(z: np.ndarray, vocab: Vocabulary, cfg: DecoderConfig) -> tuple[str, ...]:
    sl = _build_shortlist(z, vocab, cfg.shortlist_size)
    C = sl.size
    best = _Best()

    with np.errstate(invalid="ignore", divide="ignore"):
        init_scores = np.where(sl.tsq > 0, sl.tdot / np.sqrt(sl.tsq), -np.inf)
    picked = _select_candidates(
        init_scores, {}, lambda c: (c,), cfg.beam_width
    )
    if not picked:
        raise EmptyVocab("no scorable shortlist tokens")
    for _, bag, _ in picked:
        reduced = _reduce_bag(bag)
        best.offer(sl.canonical_score(reduced, z), reduced)

    bags = [bag for _, bag, _ in picked]
    dots = np.array([sl.tdot[c] for c, _, _ in picked])
    sqs = np.array([sl.tsq[c] for c, _, _ in picked])
    crosses = np.vstack([sl.gram[c] for c, _, _ in picked])

    for _ in range(1, cfg.max_len):
        nb = len(bags)
        new_dots = dots[:, None] + sl.tdot[None, :]
        new_sqs = sqs[:, None] + 2.0 * crosses + sl.tsq[None, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(new_sqs > 0, new_dots / np.sqrt(new_sqs), -np.inf)
        flat = scores.reshape(-1)

        bag_cache: dict[int, tuple[int, ...]] = {}

        def make_bag(c: int) -> tuple[int, ...]:
            b, j = divmod(c, C)
            grown = list(bags[b])
            bisect.insort(grown, j)
            return tuple(grown)

        picked = _select_candidates(flat, bag_cache, make_bag, cfg.beam_width)
        if not picked:
            break
        for _, bag, _ in picked:
            reduced = _reduce_bag(bag)
            best.offer(sl.canonical_score(reduced, z), reduced)

        parents = [c // C for c, _, _ in picked]
        toks = [c % C for c, _, _ in picked]
        bags = [bag for _, bag, _ in picked]
        dots = new_dots.reshape(-1)[[c for c, _, _ in picked]]
        sqs = new_sqs.reshape(-1)[[c for c, _, _ in picked]]
        crosses = crosses[parents] + sl.gram[toks]

    return tuple(sl.tokens[i] for i in best.bag)


def decode(z: np.ndarray, vocab: Vocabulary, cfg: DecoderConfig) -> Decoding:
    """Best token bag of length 1..max_len by re-encoding similarity to ``z``.

    Deterministic: ties resolve to the shorter, then lexicographically
    smaller, token sequence. Output tokens are in lexicographic order (the
    encoder is order-invariant, so ordering carries no signal).
    """
    z = _check_target(z)
    tokens = _beam_search(z, vocab, cfg)
    text = " ".join(tokens)
    return Decoding(
        text=text,
        reencode_similarity=inner_product(encode(text, vocab.cfg), z),
        tokens=tokens,
    )


def _sampled_path(
    z: np.ndarray, sl: _Shortlist, cfg: DecoderConfig, rng: np.random.Generator
) -> tuple[int, ...]:
    """One stochastic greedy rollout; returns the best-scoring prefix bag."""
    best = _Best()
    bag: list[int] = []
    dot, sq = 0.0, 0.0
    cross = np.zeros(sl.size)
    for _ in range(cfg.max_len):
        cand_dots = dot + sl.tdot
        cand_sqs = sq + 2.0 * cross + sl.tsq
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(cand_sqs > 0, cand_dots / np.sqrt(cand_sqs), -np.inf)
        if cfg.sample_temperature == 0.0:
            j = int(np.argmax(scores))  # first max = lexicographically smallest
        else:
            logits = (scores - np.max(scores)) / cfg.sample_temperature
            probs = np.exp(logits)
            probs[scores == -np.inf] = 0.0
            probs /= probs.sum()
            j = int(rng.choice(sl.size, p=probs))
        bisect.insort(bag, j)
        dot = float(cand_dots[j])
        sq = float(cand_sqs[j])
        cross = cross + sl.gram[j]
        reduced = _reduce_bag(tuple(bag))
        best.offer(sl.canonical_score(reduced, z), reduced)
    return best.bag


def decode_samples(
    z: np.ndarray, vocab: Vocabulary, cfg: DecoderConfig
) -> list[Decoding]:
    """Up to ``num_samples`` distinct decodings via temperature sampling.

    Each sample is a stochastic greedy rollout over the shortlist with
    softmax(score / temperature) at every expansion; duplicates are removed,
    preserving first-seen order. Temperature 0 collapses to a single
    deterministic decoding regardless of seed.
    """
    z = _check_target(z)
    sl = _build_shortlist(z, vocab, cfg.shortlist_size)
    rng = np.random.default_rng(cfg.seed)
    out: list[Decoding] = []
    seen: set[str] = set()
    for _ in range(cfg.num_samples):
        bag = _sampled_path(z, sl, cfg, rng)
        tokens = tuple(sl.tokens[i] for i in bag)
        text = " ".join(tokens)
        if text in seen:
            continue
        seen.add(text)
        out.append(
            Decoding(
                text=text,
                reencode_similarity=inner_product(encode(text, vocab.cfg), z),
                tokens=tokens,
            )
        )
    return out


def bag_of_words_f1(a: Sequence[str], b: Sequence[str]) -> float:
    """Multiset precision/recall F1 over two token sequences; symmetric."""
    ca, cb = Counter(a), Counter(b)
    overlap = sum((ca & cb).values())
    if overlap == 0:
        return 0.0
    precision = overlap / sum(cb.values())
    recall = overlap / sum(ca.values())
    return 2 * precision * recall / (precision + recall)


def round_trip_eval(
    queries: Sequence[Query],
    vocab: Vocabulary,
    enc_cfg: EncoderConfig,
    dec_cfg: DecoderConfig,
) -> tuple[float, float]:
    """Mean token F1 and mean re-encoding cosine of decode(encode(q))."""
    if not queries:
        raise ValueError("need at least one query")
    f1s, cosines = [], []
    for q in queries:
        z = encode(q.text, enc_cfg)
        decoded = decode(z, vocab, dec_cfg)
        f1s.append(bag_of_words_f1(tokenize(q.text), decoded.tokens))
        cosines.append(inner_product(encode(decoded.text, enc_cfg), z))
    return float(np.mean(f1s)), float(np.mean(cosines))


def paragraph_to_query_eval(
    qrels: Qrels,
    docs_by_id: Mapping[str, Document],
    index: IndexSnapshot,
    vocab: Vocabulary,
    dec_cfg: DecoderConfig,
    ks: Sequence[int] = (1, 3, 5),
) -> dict[int, float]:
    """Share of gold paragraphs whose decoded query retrieves them in top-k."""
    gold_ids = sorted({did for (_, did), g in qrels.items() if g > 0})
    if not gold_ids:
        raise ValueError("qrels contain no positive labels")
    for did in gold_ids:
        if did not in docs_by_id or did not in index:
            raise UnknownDocId(did)
    max_k = max(ks)
    hits = Counter()
    for did in gold_ids:
        z = encode(docs_by_id[did].text, index.encoder_cfg)
        decoded = decode(z, vocab, dec_cfg)
        rank = rank_of(index, encode(decoded.text, index.encoder_cfg), did, max_k)
        if rank is not None:
            for k in ks:
                if rank <= k:
                    hits[k] += 1
    return {k: hits[k] / len(gold_ids) for k in ks}


def with_seed(cfg: DecoderConfig, seed: int) -> DecoderConfig:
    return replace(cfg, seed=seed)
