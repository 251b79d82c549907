"""Decoder contract: fixed points, determinism, sampling, eval protocols."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lirlab import (
    DecoderConfig,
    Query,
    decode,
    decode_samples,
    encode,
    inner_product,
)
from lirlab.decoder import (
    Vocabulary,
    bag_of_words_f1,
    paragraph_to_query_eval,
    round_trip_eval,
)
from lirlab.embedding import normalize, tokenize
from lirlab.errors import EmptyVocab, UnnormalizedTarget

from conftest import load_golden


class TestDecode:
    def test_single_token_fixed_point(self, toy_vocab, cfg0):
        decoding = decode(encode("quincy", cfg0), toy_vocab, DecoderConfig())
        assert decoding.text == "quincy"
        assert decoding.reencode_similarity == pytest.approx(1.0, abs=1e-6)

    def test_recovers_exact_bag_including_duplicates(self, toy_vocab, cfg0):
        z = encode("gold price gold ounce", cfg0)
        decoding = decode(z, toy_vocab, DecoderConfig())
        assert sorted(decoding.tokens) == ["gold", "gold", "ounce", "price"]
        assert decoding.reencode_similarity == pytest.approx(1.0, abs=1e-9)

    def test_deterministic(self, toy_vocab, cfg0):
        z = encode("stock market history", cfg0)
        a = decode(z, toy_vocab, DecoderConfig())
        b = decode(z, toy_vocab, DecoderConfig())
        assert a == b

    def test_similarity_beats_every_single_token(self, toy_vocab, cfg0):
        z = encode("illinois election results", cfg0)
        best = decode(z, toy_vocab, DecoderConfig()).reencode_similarity
        singles = max(
            inner_product(encode(tok, cfg0), z) for tok in toy_vocab.tokens
        )
        assert best >= singles - 1e-9

    def test_respects_max_len(self, toy_vocab, cfg0):
        z = encode(" ".join(toy_vocab.tokens[:20]), cfg0)
        decoding = decode(z, toy_vocab, DecoderConfig(max_len=4))
        assert 1 <= len(decoding.tokens) <= 4

    def test_reencode_similarity_is_fresh(self, toy_vocab, cfg0):
        z = encode("county votes", cfg0)
        decoding = decode(z, toy_vocab, DecoderConfig())
        assert decoding.reencode_similarity == pytest.approx(
            inner_product(encode(decoding.text, cfg0), z), abs=1e-6
        )

    def test_empty_vocab(self, cfg0):
        with pytest.raises(EmptyVocab):
            decode(encode("x", cfg0), Vocabulary([], cfg0), DecoderConfig())

    def test_unnormalized_target(self, toy_vocab, cfg0):
        with pytest.raises(UnnormalizedTarget):
            decode(2.0 * encode("x", cfg0), toy_vocab, DecoderConfig())

    def test_beats_greedy_on_toy_queries(self, toy_vocab, cfg0):
        texts = [
            "neblio price today",
            "gold ounce chart",
            "stock market crash",
            "quincy illinois rainfall",
            "election turnout county",
            "general election state",
        ]
        full, greedy = DecoderConfig(), DecoderConfig(beam_width=1, shortlist_size=1)
        def mean_f1(cfg):
            scores = []
            for t in texts:
                d = decode(encode(t, cfg0), toy_vocab, cfg)
                scores.append(bag_of_words_f1(tokenize(t), d.tokens))
            return np.mean(scores)
        assert mean_f1(full) > mean_f1(greedy)

    def test_golden_fixture_doc_decode(self, fixture_ctx):
        golden = load_golden("decode_fixture.json")
        z = normalize(fixture_ctx.index.row(golden["doc_id"]))
        decoding = decode(z, fixture_ctx.vocab, DecoderConfig())
        assert decoding.text == golden["decoded_text"]
        assert decoding.reencode_similarity == pytest.approx(
            golden["reencode_similarity"], abs=1e-9
        )


class TestDecodeSamples:
    def test_temperature_zero_collapses(self, toy_vocab, cfg0):
        cfg = DecoderConfig(sample_temperature=0.0, num_samples=3, seed=9)
        out = decode_samples(encode("gold price", cfg0), toy_vocab, cfg)
        assert len(out) == 1

    def test_temperature_zero_ignores_seed(self, toy_vocab, cfg0):
        z = encode("gold price", cfg0)
        a = decode_samples(z, toy_vocab, DecoderConfig(num_samples=2, seed=1))
        b = decode_samples(z, toy_vocab, DecoderConfig(num_samples=2, seed=2))
        assert [d.text for d in a] == [d.text for d in b]

    def test_same_seed_same_list(self, toy_vocab, cfg0):
        z = encode("stock market", cfg0)
        cfg = DecoderConfig(sample_temperature=0.1, num_samples=10, seed=5)
        a = decode_samples(z, toy_vocab, cfg)
        b = decode_samples(z, toy_vocab, cfg)
        assert [d.text for d in a] == [d.text for d in b]

    def test_at_most_n_unique(self, toy_vocab, cfg0):
        cfg = DecoderConfig(sample_temperature=0.3, num_samples=10, seed=5)
        out = decode_samples(encode("price chart", cfg0), toy_vocab, cfg)
        texts = [d.text for d in out]
        assert len(texts) <= 10
        assert len(set(texts)) == len(texts)

    def test_golden_fixture_samples(self, fixture_ctx):
        golden = load_golden("decode_fixture.json")
        query = fixture_ctx.queries_by_id[golden["samples_query_id"]]
        cfg = DecoderConfig(
            sample_temperature=golden["samples_temperature"],
            num_samples=10,
            seed=golden["samples_seed"],
        )
        out = decode_samples(
            encode(query.text, fixture_ctx.encoder_cfg), fixture_ctx.vocab, cfg
        )
        assert [d.text for d in out] == golden["sample_texts"]


class TestBagOfWordsF1:
    def test_identity(self):
        assert bag_of_words_f1(["a", "b"], ["a", "b"]) == 1.0

    def test_half_overlap(self):
        assert bag_of_words_f1(["a", "b"], ["a", "c"]) == 0.5

    def test_disjoint(self):
        assert bag_of_words_f1(["a"], ["b"]) == 0.0

    def test_multiset_counts_matter(self):
        # one shared "a" out of (2, 1) occurrences
        got = bag_of_words_f1(["a", "a"], ["a"])
        assert got == pytest.approx(2 * (1 / 1) * (1 / 2) / (1 / 1 + 1 / 2))

    @given(
        st.lists(st.sampled_from("abcde"), min_size=1, max_size=8),
        st.lists(st.sampled_from("abcde"), min_size=1, max_size=8),
    )
    @settings(max_examples=100, deadline=None)
    def test_symmetric_bounded_and_one_iff_equal(self, a, b):
        f = bag_of_words_f1(a, b)
        assert f == bag_of_words_f1(b, a)
        assert 0.0 <= f <= 1.0
        assert (f == 1.0) == (sorted(a) == sorted(b))


class TestEvalProtocols:
    def test_round_trip_identity_upper_bound(self):
        # a decoder that returns its input verbatim scores F1 = cos = 1
        assert bag_of_words_f1(["a", "b"], ["a", "b"]) == 1.0

    def test_round_trip_on_toy(self, toy_vocab, cfg0):
        queries = [Query("q1", "gold price"), Query("q2", "stock market crash")]
        f1, cos = round_trip_eval(queries, toy_vocab, cfg0, DecoderConfig())
        assert f1 == pytest.approx(1.0)
        assert cos == pytest.approx(1.0, abs=1e-9)

    def test_paragraph_to_query_monotone(self, toy_index, toy_docs, toy_vocab):
        from lirlab import Qrels

        qrels = Qrels({("q1", "d01"): 1, ("q2", "d04"): 1, ("q3", "d08"): 1})
        docs_by_id = {d.doc_id: d for d in toy_docs}
        res = paragraph_to_query_eval(
            qrels, docs_by_id, toy_index, toy_vocab, DecoderConfig()
        )
        assert res[1] <= res[3] <= res[5]
