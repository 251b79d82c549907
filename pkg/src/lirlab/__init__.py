"""Desk-scale dense-retrieval lab with an invertible hash encoder.

Embeds queries and documents into one unit-norm space, decodes latent
vectors back to query strings, traverses the line between query and gold
paragraph embeddings to synthesize successful reformulations, and compares
pseudo-relevance-feedback suggestion methods under a best-of-k nDCG
protocol.
"""

from .corpus import (
    Document,
    IndexSnapshot,
    Qrels,
    Query,
    SearchResult,
    build_index,
    load_index,
    rank_of,
    read_corpus,
    read_qrels,
    read_queries,
    save_index,
    search,
)
from .decoder import (
    DecoderConfig,
    Decoding,
    Vocabulary,
    bag_of_words_f1,
    decode,
    decode_samples,
    paragraph_to_query_eval,
    round_trip_eval,
)
from .embedding import EncoderConfig, encode, inner_product, normalize, tokenize
from .metrics import (
    EvalReport,
    NGramLM,
    best_of_k,
    bootstrap_best_of_k,
    ndcg_at_k,
    perplexity,
    self_bleu,
)
from .suggesters import (
    RM3Config,
    SamplingConfig,
    Suggestion,
    SuggestionSet,
    TermStats,
    plain_suggest,
    prf_traversal_suggest,
    rm3_suggest,
    sampling_qd_suggest,
    suggest,
)
from .traversal import (
    ReformulationRecord,
    TraversalPath,
    dataset_histograms,
    generate_dataset,
    make_path,
    traverse_and_decode,
)

__version__ = "0.1.0"
