"""Corpus records, qrels, and the exact inner-product index.

File formats:

* corpus - JSONL, one ``{"doc_id": str, "text": str, "title": str?}`` per line
* queries - TSV ``query_id<TAB>text``
* qrels - TREC style ``query_id 0 doc_id grade`` (whitespace separated)
* index - binary snapshot, see :func:`save_index`

Retrieval is brute-force maximum inner product over all rows. Corpora here
are desk scale, so exactness is affordable and every ranking stays
oracle-checkable. Ties are broken by ascending doc_id; rows are stored in
ascending doc_id order, which makes a stable sort on the score vector
sufficient.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .embedding import EncoderConfig, encode
from .errors import (
    DimMismatch,
    DuplicateDocId,
    EmptyCorpus,
    EmptyText,
    ParseError,
    UnknownDocId,
)

_MAGIC = b"LIRX"
_VERSION = 1


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    title: str | None = None


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str


class Qrels:
    """Graded relevance labels keyed by (query_id, doc_id)."""

    def __init__(self, grades: Mapping[tuple[str, str], int] | None = None):
        self._grades: dict[tuple[str, str], int] = {}
        if grades:
            for key, grade in grades.items():
                self.add(key[0], key[1], grade)

    def add(self, query_id: str, doc_id: str, grade: int) -> None:
        if grade < 0:
            raise ValueError(f"negative grade for ({query_id}, {doc_id})")
        self._grades[(query_id, doc_id)] = int(grade)

    def grade(self, query_id: str, doc_id: str) -> int:
        return self._grades.get((query_id, doc_id), 0)

    def grades_for(self, query_id: str) -> dict[str, int]:
        """doc_id -> grade map for one query (positive grades only)."""
        return {
            did: g
            for (qid, did), g in self._grades.items()
            if qid == query_id and g > 0
        }

    def gold_for(self, query_id: str) -> str | None:
        """Highest-graded doc for the query; ties go to the smallest doc_id."""
        graded = self.grades_for(query_id)
        if not graded:
            return None
        return min(graded, key=lambda did: (-graded[did], did))

    def query_ids(self) -> list[str]:
        return sorted({qid for (qid, _), g in self._grades.items() if g > 0})

    def items(self):
        return self._grades.items()

    def __len__(self) -> int:
        return len(self._grades)


def read_corpus(path: str | Path) -> list[Document]:
    """Parse a JSONL corpus; rejects duplicate ids and malformed lines."""
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {line_no}: invalid JSON ({exc})", line_no)
            if not isinstance(obj, dict) or "doc_id" not in obj or "text" not in obj:
                raise ParseError(f"line {line_no}: missing doc_id or text", line_no)
            doc_id = str(obj["doc_id"])
            text = str(obj["text"])
            if not text:
                raise ParseError(f"line {line_no}: empty text", line_no)
            if doc_id in seen:
                raise DuplicateDocId(doc_id)
            seen.add(doc_id)
            title = obj.get("title")
            docs.append(Document(doc_id, text, None if title is None else str(title)))
    return docs


def read_queries(path: str | Path) -> list[Query]:
    queries: list[Query] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t", 1)
            if len(parts) != 2 or not parts[1]:
                raise ParseError(f"line {line_no}: expected 'query_id\\ttext'", line_no)
            qid, text = parts
            if qid in seen:
                raise ParseError(f"line {line_no}: duplicate query_id {qid!r}", line_no)
            seen.add(qid)
            queries.append(Query(qid, text))
    return queries


def read_qrels(path: str | Path) -> Qrels:
    qrels = Qrels()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(
                    f"line {line_no}: expected 'query_id 0 doc_id grade'", line_no
                )
            qid, _, did, grade = parts
            try:
                qrels.add(qid, did, int(grade))
            except ValueError as exc:
                raise ParseError(f"line {line_no}: bad grade ({exc})", line_no)
    return qrels


@dataclass(frozen=True)
class SearchResult:
    """Top-k ranking: (doc_id, score) pairs with non-increasing scores."""

    entries: list[tuple[str, float]]
    k: int

    def doc_ids(self) -> list[str]:
        return [did for did, _ in self.entries]


@dataclass
class IndexSnapshot:
    """Immutable document-side of the retrieval model.

    ``matrix`` holds float32 rows exactly as persisted, so a save/load
    round trip is the identity; ``matrix64`` is the float64 working copy
    used for scoring.
    """

    doc_ids: list[str]
    matrix: np.ndarray
    encoder_cfg: EncoderConfig
    _row_of: dict[str, int] = field(default_factory=dict, repr=False)
    _matrix64: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self._row_of = {did: i for i, did in enumerate(self.doc_ids)}
        self._matrix64 = self.matrix.astype(np.float64)
        self.matrix.setflags(write=False)
        self._matrix64.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def matrix64(self) -> np.ndarray:
        assert self._matrix64 is not None
        return self._matrix64

    def row(self, doc_id: str) -> np.ndarray:
        """Stored (float32-rounded) embedding of a document, as float64."""
        if doc_id not in self._row_of:
            raise UnknownDocId(doc_id)
        return self.matrix64[self._row_of[doc_id]]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._row_of


def build_index(docs: Iterable[Document], cfg: EncoderConfig) -> IndexSnapshot:
    """Encode all documents into a snapshot; rows ascend by doc_id."""
    by_id: dict[str, Document] = {}
    for doc in docs:
        if doc.doc_id in by_id:
            raise DuplicateDocId(doc.doc_id)
        by_id[doc.doc_id] = doc
    if not by_id:
        raise EmptyCorpus("no documents to index")
    doc_ids = sorted(by_id)
    matrix = np.zeros((len(doc_ids), cfg.dim), dtype=np.float32)
    for i, did in enumerate(doc_ids):
        try:
            matrix[i] = encode(by_id[did].text, cfg).astype(np.float32)
        except EmptyText:
            raise EmptyText(f"document {did!r} has no tokens")
    return IndexSnapshot(doc_ids=doc_ids, matrix=matrix, encoder_cfg=cfg)


def save_index(index: IndexSnapshot, path: str | Path) -> None:
    """Binary layout: magic, version u32, dim u32, count u64, config JSON
    (u32 length + bytes), doc_id table (u32 length + UTF-8 each), then the
    float32 row-major matrix. All integers little-endian."""
    cfg_bytes = index.encoder_cfg.to_json().encode("utf-8")
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<I", _VERSION))
    buf.write(struct.pack("<I", index.dim))
    buf.write(struct.pack("<Q", len(index.doc_ids)))
    buf.write(struct.pack("<I", len(cfg_bytes)))
    buf.write(cfg_bytes)
    for did in index.doc_ids:
        raw = did.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
    buf.write(np.ascontiguousarray(index.matrix, dtype="<f4").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_index(path: str | Path) -> IndexSnapshot:
    data = Path(path).read_bytes()
    view = memoryview(data)
    if bytes(view[:4]) != _MAGIC:
        raise ParseError(f"{path}: not an index file (bad magic)")
    version = struct.unpack_from("<I", view, 4)[0]
    if version != _VERSION:
        raise ParseError(f"{path}: unsupported index version {version}")
    dim = struct.unpack_from("<I", view, 8)[0]
    count = struct.unpack_from("<Q", view, 12)[0]
    cfg_len = struct.unpack_from("<I", view, 20)[0]
    off = 24
    cfg = EncoderConfig.from_json(bytes(view[off : off + cfg_len]).decode("utf-8"))
    off += cfg_len
    doc_ids: list[str] = []
    for _ in range(count):
        n = struct.unpack_from("<I", view, off)[0]
        off += 4
        doc_ids.append(bytes(view[off : off + n]).decode("utf-8"))
        off += n
    matrix = np.frombuffer(data, dtype="<f4", count=count * dim, offset=off)
    matrix = matrix.reshape(count, dim).copy()
    return IndexSnapshot(doc_ids=doc_ids, matrix=matrix, encoder_cfg=cfg)


def search(index: IndexSnapshot, q: np.ndarray, k: int) -> SearchResult:
    """Exact top-k by inner product; ties broken by ascending doc_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (index.dim,):
        raise DimMismatch(f"query dim {q.shape} vs index dim {index.dim}")
    scores = index.matrix64 @ q
    # Rows already ascend by doc_id, so a stable sort settles ties correctly.
    order = np.argsort(-scores, kind="stable")[:k]
    entries = [(index.doc_ids[i], float(scores[i])) for i in order]
    return SearchResult(entries=entries, k=k)


def rank_of(
    index: IndexSnapshot, q: np.ndarray, doc_id: str, max_k: int
) -> int | None:
    """1-based rank of ``doc_id`` within the top ``max_k``, else ``None``."""
    if doc_id not in index:
        raise UnknownDocId(doc_id)
    result = search(index, q, max_k)
    for pos, (did, _) in enumerate(result.entries, start=1):
        if did == doc_id:
            return pos
    return None
