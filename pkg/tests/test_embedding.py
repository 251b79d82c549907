"""Encoder contract: tokenizer rules, hashing determinism, shared-space math.

The oracle here is a from-scratch reimplementation of the feature hashing
(plain dicts, no numpy, its own accumulation order) used to cross-check the
production encoder coordinate by coordinate.
"""

import hashlib
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lirlab import EncoderConfig, encode, inner_product, tokenize
from lirlab.embedding import normalize, raw_vector, token_raw_vector
from lirlab.errors import DimMismatch, EmptyText

from conftest import load_golden


def oracle_encode(text, cfg):
    """Independent reference encoder: dict accumulation, python floats."""

    def h(feature, salt):
        digest = hashlib.blake2b(
            feature.encode("utf-8"),
            digest_size=8,
            key=cfg.seed.to_bytes(8, "little"),
            salt=salt,
        ).digest()
        return int.from_bytes(digest, "little")

    tokens = tokenize(text)
    assert tokens, "oracle assumes non-empty input"
    feats = Counter()
    for tok in tokens:
        if cfg.use_word_unigrams:
            feats["w:" + tok] += 1
        for i in range(len(tok) - cfg.ngram_order + 1):
            feats["c:" + tok[i : i + cfg.ngram_order]] += 1
    coords = {}
    for feat, tf in feats.items():
        idx = h(feat, b"coord") % cfg.dim
        sign = 1.0 if h(feat, b"sign") % 2 == 0 else -1.0
        coords[idx] = coords.get(idx, 0.0) + sign * tf
    norm = math.sqrt(sum(v * v for v in coords.values()))
    return {i: v / norm for i, v in coords.items() if v != 0.0}


class TestTokenize:
    def test_lowercase_and_split(self):
        assert tokenize("Nebl Coin price") == ["nebl", "coin", "price"]

    def test_empty(self):
        assert tokenize("") == []

    def test_punctuation_split(self):
        # run the rules by hand: '&' splits, digits survive
        assert tokenize("S&P 500") == ["s", "p", "500"]

    def test_underscore_splits(self):
        assert tokenize("foo_bar") == ["foo", "bar"]

    @given(st.text())
    def test_tokens_nonempty_lower_no_space(self, text):
        for tok in tokenize(text):
            assert tok
            assert tok == tok.lower()
            assert not any(ch.isspace() for ch in tok)

    @given(st.text())
    def test_deterministic(self, text):
        assert tokenize(text) == tokenize(text)


class TestEncode:
    def test_unit_norm(self, cfg0):
        for text in ["hello", "hello world", "a b c d e f", "42"]:
            assert abs(np.linalg.norm(encode(text, cfg0)) - 1.0) <= 1e-6

    def test_order_invariance(self, cfg0):
        a = encode("hello world", cfg0)
        b = encode("world hello", cfg0)
        assert np.array_equal(a, b)

    def test_empty_raises(self, cfg0):
        with pytest.raises(EmptyText):
            encode("", cfg0)
        with pytest.raises(EmptyText):
            encode("!!! ...", cfg0)

    def test_bit_identical_across_calls(self, cfg0):
        a = encode("neblio price chart", cfg0)
        b = encode("neblio price chart", cfg0)
        assert a.tobytes() == b.tobytes()

    def test_seed_changes_embedding(self):
        a = encode("hello world", EncoderConfig(seed=1))
        b = encode("hello world", EncoderConfig(seed=2))
        assert not np.array_equal(a, b)

    def test_against_oracle(self, cfg0):
        for text in [
            "hello world",
            "nebl coin price",
            "the quick brown fox jumps over the lazy dog",
            "S&P 500 index",
            "aaa aaa aaa bbb",
        ]:
            got = encode(text, cfg0)
            want = oracle_encode(text, cfg0)
            for i in range(cfg0.dim):
                assert got[i] == pytest.approx(want.get(i, 0.0), abs=1e-12), (
                    text,
                    i,
                )

    def test_golden_vector(self, cfg0):
        golden = load_golden("encode_hello_world.json")
        got = encode("hello world", cfg0)
        assert got.tolist() == golden["vector"]

    def test_linearity_of_raw_vectors(self, cfg0):
        whole = raw_vector("alpha beta gamma", cfg0)
        parts = (
            token_raw_vector("alpha", cfg0)
            + token_raw_vector("beta", cfg0)
            + token_raw_vector("gamma", cfg0)
        )
        assert np.array_equal(whole, parts)

    def test_raw_coordinates_are_integers(self, cfg0):
        raw = raw_vector("some words repeated words words", cfg0)
        assert np.array_equal(raw, np.round(raw))

    @given(st.integers(min_value=8, max_value=64), st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=20, deadline=None)
    def test_config_roundtrip(self, dim, seed):
        cfg = EncoderConfig(dim=dim, seed=seed)
        assert EncoderConfig.from_json(cfg.to_json()) == cfg


class TestInnerProduct:
    def test_self_is_one(self, cfg0):
        v = encode("quincy illinois", cfg0)
        assert inner_product(v, v) == pytest.approx(1.0, abs=1e-6)

    def test_negation_is_minus_one(self, cfg0):
        v = encode("quincy illinois", cfg0)
        assert inner_product(v, -v) == pytest.approx(-1.0, abs=1e-6)

    def test_symmetric(self, cfg0):
        a = encode("nebl coin", cfg0)
        b = encode("neblio price", cfg0)
        assert inner_product(a, b) == inner_product(b, a)

    def test_unit_range(self, cfg0):
        a = encode("one two", cfg0)
        b = encode("three four", cfg0)
        assert -1.0 - 1e-6 <= inner_product(a, b) <= 1.0 + 1e-6

    def test_dim_mismatch(self):
        a = encode("x", EncoderConfig(dim=64))
        b = encode("x", EncoderConfig(dim=128))
        with pytest.raises(DimMismatch):
            inner_product(a, b)

    def test_pair_value_matches_oracle(self, cfg0):
        a = encode("nebl coin", cfg0)
        b = encode("neblio price", cfg0)
        oa = oracle_encode("nebl coin", cfg0)
        ob = oracle_encode("neblio price", cfg0)
        want = sum(v * ob.get(i, 0.0) for i, v in oa.items())
        assert inner_product(a, b) == pytest.approx(want, abs=1e-12)


class TestLocality:
    def test_drop_one_token_stays_closer_than_other_doc(self, cfg0):
        """Deleting one token moves a doc less than hopping to another doc."""
        rng = np.random.default_rng(12345)
        words = [f"w{i:03d}" for i in range(400)]
        docs = [
            " ".join(rng.choice(words, size=rng.integers(8, 20)))
            for _ in range(200)
        ]
        wins = trials = 0
        for _ in range(1000):
            i, j = rng.integers(0, len(docs), size=2)
            if i == j:
                continue
            toks = docs[i].split()
            if len(toks) < 2:
                continue
            drop = rng.integers(0, len(toks))
            mutated = " ".join(t for p, t in enumerate(toks) if p != drop)
            base = encode(docs[i], cfg0)
            near = inner_product(base, encode(mutated, cfg0))
            far = inner_product(base, encode(docs[j], cfg0))
            trials += 1
            wins += near > far
        assert trials >= 900
        assert wins / trials >= 0.95


def test_normalize_zero_vector_raises():
    with pytest.raises(ValueError):
        normalize(np.zeros(8))
