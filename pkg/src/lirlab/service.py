"""JSON-over-HTTP API for interactive suggestion and traversal sessions.

Endpoints (all JSON UTF-8):

* ``POST /search``   {query, k?}                -> ranked docs with texts
* ``POST /suggest``  {query, method, n?}        -> suggestion set (nDCG when
  qrels are loaded and the query is a known one)
* ``POST /traverse`` {query, doc_id, steps?}    -> per-step decodings, metrics
  and 2-D PCA coordinates of path/results/gold
* ``POST /decode``   {text} | {doc_id}          -> decoded query
* ``GET  /doc/<id>``                            -> stored document
* ``POST /session``                             -> new session id
* ``GET  /session/<id>``                        -> session state
* ``POST /session/<id>/step`` {query, chosen_suggestion?} -> search + append

Traversal nDCG is scored against the requested target document as a binary
gold unless the query text matches a loaded query with judgments. Responses
are pure functions of (index snapshot, request, seed); sessions use a
deterministic counter, so replaying a request log reproduces every byte.
Errors: 400 malformed body, 404 unknown doc/session/route, 422 domain error
with a machine-readable code.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from .corpus import Query, search
from .decoder import DecoderConfig, decode
from .embedding import encode, normalize
from .errors import LirlabError, UnknownDocId
from .metrics import ndcg_at_k
from .pipeline import LabContext, suggest_for_query
from .traversal import make_path, traverse_and_decode

_SESSION_RE = re.compile(r"^/session/([^/]+)(/step)?$")


def pca_2d(groups: dict[str, np.ndarray]) -> dict[str, list[list[float]]]:
    """Project all group members onto the top-2 principal components.

    Components are sign-fixed (largest-magnitude loading positive) so the
    projection is deterministic.
    """
    stacked = np.vstack(list(groups.values()))
    center = stacked.mean(axis=0)
    u, s, vt = np.linalg.svd(stacked - center, full_matrices=False)
    comps = vt[:2]
    for i in range(comps.shape[0]):
        j = int(np.argmax(np.abs(comps[i])))
        if comps[i, j] < 0:
            comps[i] = -comps[i]
    out = {}
    for name, members in groups.items():
        proj = (members - center) @ comps.T
        out[name] = [[float(x), float(y)] for x, y in proj]
    return out


@dataclass
class SessionState:
    session_id: str
    history: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"session_id": self.session_id, "history": self.history}


class _Sessions:
    """Mutex-guarded in-memory session table with deterministic ids."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._sessions: dict[str, SessionState] = {}
        self._next = 1

    def create(self) -> SessionState:
        with self._lock:
            sid = f"s-{self._next}"
            self._next += 1
            state = SessionState(session_id=sid)
            self._sessions[sid] = state
            return state

    def get(self, sid: str) -> SessionState | None:
        with self._lock:
            return self._sessions.get(sid)

    def append(self, sid: str, entry: dict) -> SessionState | None:
        with self._lock:
            state = self._sessions.get(sid)
            if state is not None:
                state.history.append(entry)
            return state


class _HttpError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


class LabService:
    """Request handlers independent of the HTTP plumbing (unit-testable)."""

    def __init__(self, ctx: LabContext, seed: int = 0, dec_cfg: DecoderConfig | None = None):
        self.ctx = ctx
        self.seed = seed
        self.dec_cfg = dec_cfg or DecoderConfig()
        self.sessions = _Sessions()

    # -- helpers ---------------------------------------------------------

    def _doc_payload(self, doc_id: str, score: float | None = None) -> dict:
        doc = self.ctx.docs_by_id[doc_id]
        payload = {"doc_id": doc.doc_id, "text": doc.text, "title": doc.title}
        if score is not None:
            payload["score"] = score
        return payload

    def _search_payload(self, query_text: str, k: int) -> dict:
        emb = encode(query_text, self.ctx.encoder_cfg)
        result = search(self.ctx.index, emb, k)
        return {
            "query": query_text,
            "k": k,
            "results": [self._doc_payload(d, s) for d, s in result.entries],
        }

    # -- endpoint bodies ---------------------------------------------------

    def search(self, body: dict) -> dict:
        query = _require_str(body, "query")
        k = int(body.get("k", 10))
        if k < 1:
            raise _HttpError(422, "BadK", "k must be >= 1")
        return self._search_payload(query, k)

    def suggest(self, body: dict) -> dict:
        text = _require_str(body, "query")
        method = _require_str(body, "method")
        n = int(body.get("n", 10))
        query_id = body.get("query_id") or self.ctx.query_id_for_text(text)
        known = query_id is not None and self.ctx.qrels is not None
        query = Query(query_id if known else "adhoc", text)
        sset = suggest_for_query(
            self.ctx, method, query, seed=self.seed, dec_cfg=self.dec_cfg,
            with_metrics=known,
        )
        payload = sset.to_dict()
        payload["suggestions"] = payload["suggestions"][:n]
        return payload

    def decode_vector(self, body: dict) -> dict:
        if "text" in body:
            z = encode(_require_str(body, "text"), self.ctx.encoder_cfg)
        elif "doc_id" in body:
            doc_id = _require_str(body, "doc_id")
            if doc_id not in self.ctx.index:
                raise _HttpError(404, "UnknownDocId", doc_id)
            z = normalize(self.ctx.index.row(doc_id))
        else:
            raise _HttpError(400, "BadRequest", "need text or doc_id")
        decoding = decode(z, self.ctx.vocab, self.dec_cfg)
        return {
            "text": decoding.text,
            "reencode_similarity": decoding.reencode_similarity,
        }

    def traverse(self, body: dict) -> dict:
        text = _require_str(body, "query")
        doc_id = _require_str(body, "doc_id")
        steps = int(body.get("steps", 20))
        if steps < 1:
            raise _HttpError(422, "BadSteps", "steps must be >= 1")
        if doc_id not in self.ctx.index:
            raise _HttpError(404, "UnknownDocId", doc_id)
        query_id = self.ctx.query_id_for_text(text)
        if query_id is not None and self.ctx.qrels is not None:
            grades = self.ctx.qrels.grades_for(query_id) or {doc_id: 1}
        else:
            grades = {doc_id: 1}
        query = Query(query_id or "adhoc", text)
        step_records = traverse_and_decode(
            query, doc_id, steps, self.ctx.index, self.ctx.docs_by_id,
            self.ctx.vocab, self.dec_cfg, grades,
        )
        cfg = self.ctx.encoder_cfg
        q_emb = encode(text, cfg)
        d_emb = encode(self.ctx.docs_by_id[doc_id].text, cfg)
        path = make_path(q_emb, d_emb, steps)
        result = search(self.ctx.index, q_emb, 10)
        coords = pca_2d(
            {
                "path": np.vstack(path.points),
                "results": np.vstack([self.ctx.index.row(d) for d, _ in result.entries]),
                "gold": d_emb.reshape(1, -1),
            }
        )
        return {
            "query": text,
            "doc_id": doc_id,
            "steps": [
                {
                    "kappa": s.kappa,
                    "text": s.decoding.text,
                    "reencode_similarity": s.decoding.reencode_similarity,
                    "ndcg_at_10": s.ndcg_at_10,
                    "ip_with_gold": s.ip_with_gold,
                }
                for s in step_records
            ],
            "original_ndcg_at_10": ndcg_at_k(result, grades, 10),
            "pca": {
                "path": coords["path"],
                "results": [
                    {"doc_id": d, "xy": xy}
                    for (d, _), xy in zip(result.entries, coords["results"])
                ],
                "gold": coords["gold"][0],
            },
        }

    def doc(self, doc_id: str) -> dict:
        if doc_id not in self.ctx.docs_by_id:
            raise _HttpError(404, "UnknownDocId", doc_id)
        return self._doc_payload(doc_id)

    def session_create(self) -> dict:
        return self.sessions.create().to_dict()

    def session_get(self, sid: str) -> dict:
        state = self.sessions.get(sid)
        if state is None:
            raise _HttpError(404, "UnknownSession", sid)
        return state.to_dict()

    def session_step(self, sid: str, body: dict) -> dict:
        query = _require_str(body, "query")
        chosen = body.get("chosen_suggestion")
        k = int(body.get("k", 10))
        result = self._search_payload(query, k)
        entry = {
            "query": query,
            "chosen_suggestion": chosen,
            "top_doc_ids": [r["doc_id"] for r in result["results"]],
        }
        state = self.sessions.append(sid, entry)
        if state is None:
            raise _HttpError(404, "UnknownSession", sid)
        return {
            "session_id": sid,
            "history_length": len(state.history),
            "result": result,
        }


def _require_str(body: dict, key: str) -> str:
    value = body.get(key)
    if not isinstance(value, str) or not value.strip():
        raise _HttpError(400, "BadRequest", f"missing or empty {key!r}")
    return value


def make_handler(service: LabService, ui_dir: str | None):
    ui_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, status: int, payload: dict | list) -> None:
            blob = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

        def _send_error(self, status: int, code: str, message: str) -> None:
            self._send(status, {"error": code, "message": message})

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return {}
            try:
                body = json.loads(raw)
            except json.JSONDecodeError:
                raise _HttpError(400, "BadRequest", "body is not valid JSON")
            if not isinstance(body, dict):
                raise _HttpError(400, "BadRequest", "body must be a JSON object")
            return body

        def _serve_static(self, path: str) -> None:
            assert ui_root is not None
            rel = "index.html" if path in ("", "/") else path.lstrip("/")
            target = (ui_root / rel).resolve()
            if not str(target).startswith(str(ui_root)) or not target.is_file():
                self._send_error(404, "NotFound", path)
                return
            types = {
                ".html": "text/html",
                ".js": "text/javascript",
                ".css": "text/css",
                ".map": "application/json",
                ".svg": "image/svg+xml",
            }
            blob = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", types.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

        def do_GET(self):  # noqa: N802 (http.server naming)
            try:
                if self.path.startswith("/doc/"):
                    self._send(200, service.doc(self.path[len("/doc/") :]))
                    return
                m = _SESSION_RE.match(self.path)
                if m and not m.group(2):
                    self._send(200, service.session_get(m.group(1)))
                    return
                if ui_root is not None:
                    self._serve_static(self.path)
                    return
                self._send_error(404, "NotFound", self.path)
            except _HttpError as exc:
                self._send_error(exc.status, exc.code, str(exc))

        def do_POST(self):  # noqa: N802
            try:
                body = self._body()
                if self.path == "/search":
                    self._send(200, service.search(body))
                elif self.path == "/suggest":
                    self._send(200, service.suggest(body))
                elif self.path == "/decode":
                    self._send(200, service.decode_vector(body))
                elif self.path == "/traverse":
                    self._send(200, service.traverse(body))
                elif self.path == "/session":
                    self._send(200, service.session_create())
                else:
                    m = _SESSION_RE.match(self.path)
                    if m and m.group(2):
                        self._send(200, service.session_step(m.group(1), body))
                    else:
                        self._send_error(404, "NotFound", self.path)
            except _HttpError as exc:
                self._send_error(exc.status, exc.code, str(exc))
            except UnknownDocId as exc:
                self._send_error(404, exc.code, str(exc))
            except LirlabError as exc:
                self._send_error(422, exc.code, str(exc))

    return Handler


def make_server(
    ctx: LabContext,
    port: int = 0,
    seed: int = 0,
    ui_dir: str | None = None,
    dec_cfg: DecoderConfig | None = None,
) -> ThreadingHTTPServer:
    service = LabService(ctx, seed=seed, dec_cfg=dec_cfg)
    return ThreadingHTTPServer(("127.0.0.1", port), make_handler(service, ui_dir))


def serve_forever(ctx: LabContext, port: int, seed: int = 0, ui_dir: str | None = None) -> None:
    server = make_server(ctx, port=port, seed=seed, ui_dir=ui_dir)
    host, actual_port = server.server_address
    print(f"serving on http://{host}:{actual_port}/ (docs: {len(ctx.docs)})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
