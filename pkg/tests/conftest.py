import json
from pathlib import Path

import pytest

from lirlab import Document, EncoderConfig, Query, build_index
from lirlab.decoder import Vocabulary
from lirlab.pipeline import load_context

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"


def _load_ctx(name):
    d = DATA / name
    return load_context(
        corpus_path=d / "corpus.jsonl",
        queries_path=d / "queries.tsv",
        qrels_path=d / "qrels.txt",
        encoder_cfg=EncoderConfig.from_json((d / "encoder.json").read_text()),
    )


@pytest.fixture(scope="session")
def fixture_ctx():
    """The shipped 1000-doc / 200-query corpus, index and vocabulary."""
    return _load_ctx("fixture")


@pytest.fixture(scope="session")
def sample_ctx():
    """The shipped 500-doc / 200-query corpus used for end-to-end runs."""
    return _load_ctx("sample")


@pytest.fixture(scope="session")
def cfg0():
    return EncoderConfig(dim=256, seed=0)


@pytest.fixture(scope="session")
def toy_docs():
    """Hand-sized corpus: four topics, some shared vocabulary, duplicates."""
    return [
        Document("d01", "neblio price chart us dollar neblio price for today"),
        Document("d02", "illinois elections general election held in the state of illinois"),
        Document("d03", "average yearly return on the stock market index gauges performance"),
        Document("d04", "quincy illinois climate rainfall average location mississippi river"),
        Document("d05", "stock market crash history october prices fell sharply"),
        Document("d06", "price of gold per ounce chart gold price today"),
        Document("d07", "quincy washington location county agriculture columbia basin"),
        Document("d08", "general election turnout results state county votes counted"),
    ]


@pytest.fixture(scope="session")
def toy_index(toy_docs, cfg0):
    return build_index(toy_docs, cfg0)


@pytest.fixture(scope="session")
def toy_vocab(toy_docs, cfg0):
    return Vocabulary.from_documents(toy_docs, cfg0)


def load_golden(name: str):
    path = GOLDEN / name
    if not path.exists():
        pytest.fail(f"golden file missing: {path} (run scripts/freeze_goldens.py)")
    if name.endswith(".json"):
        return json.loads(path.read_text())
    return path.read_text()
