"""HTTP API: endpoint contracts, error statuses, and the session loop."""

import json
import threading
import urllib.error
import urllib.request

import numpy as np
import pytest

from lirlab import Document, EncoderConfig, Qrels, Query, build_index
from lirlab.decoder import Vocabulary
from lirlab.pipeline import LabContext
from lirlab.service import make_server, pca_2d
from lirlab.suggesters import TermStats

DOCS = [
    Document("v1", "violin strings rosin bow concerto violin"),
    Document("v2", "cello bow strings orchestra suite"),
    Document("v3", "trumpet brass valve fanfare jazz"),
    Document("v4", "jazz saxophone reed improvisation solo"),
]
QUERIES = [Query("q1", "violin concerto"), Query("q2", "jazz solo")]


@pytest.fixture(scope="module")
def server_url():
    cfg = EncoderConfig(dim=128, seed=3)
    index = build_index(DOCS, cfg)
    ctx = LabContext(
        encoder_cfg=cfg,
        docs=DOCS,
        docs_by_id={d.doc_id: d for d in DOCS},
        index=index,
        vocab=Vocabulary.from_documents(DOCS, cfg),
        stats=TermStats(DOCS),
        queries=QUERIES,
        qrels=Qrels({("q1", "v1"): 1, ("q2", "v4"): 1}),
    )
    server = make_server(ctx, port=0, seed=9)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address
    yield f"http://{host}:{port}"
    server.shutdown()


def post(url, path, body):
    req = urllib.request.Request(
        url + path,
        data=json.dumps(body).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        return resp.status, json.loads(resp.read())


def post_raw(url, path, blob):
    req = urllib.request.Request(
        url + path, data=blob, headers={"Content-Type": "application/json"},
        method="POST",
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


def get(url, path):
    try:
        with urllib.request.urlopen(url + path) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read())


class TestEndpoints:
    def test_search_returns_texts(self, server_url):
        status, body = post(server_url, "/search", {"query": "violin concerto", "k": 3})
        assert status == 200
        assert body["results"][0]["doc_id"] == "v1"
        assert "violin" in body["results"][0]["text"]
        scores = [r["score"] for r in body["results"]]
        assert scores == sorted(scores, reverse=True)

    def test_doc_lookup(self, server_url):
        status, body = get(server_url, "/doc/v3")
        assert status == 200
        assert body["doc_id"] == "v3"
        status, _ = get(server_url, "/doc/zz")
        assert status == 404

    def test_decode_text_and_doc(self, server_url):
        status, body = post(server_url, "/decode", {"text": "violin strings"})
        assert status == 200
        assert body["reencode_similarity"] > 0.9
        status, body = post(server_url, "/decode", {"doc_id": "v2"})
        assert status == 200
        assert body["text"]

    def test_suggest_known_query_has_metrics(self, server_url):
        status, body = post(
            server_url, "/suggest", {"query": "violin concerto", "method": "rm3", "n": 5}
        )
        assert status == 200
        assert body["method"] == "rm3"
        assert all(s["ndcg"] is not None for s in body["suggestions"])

    def test_suggest_adhoc_query_has_no_metrics(self, server_url):
        status, body = post(
            server_url, "/suggest", {"query": "brass fanfare", "method": "plain", "n": 5}
        )
        assert status == 200
        assert all(s["ndcg"] is None for s in body["suggestions"])

    def test_traverse_step_count_and_pca_shape(self, server_url):
        steps = 6
        status, body = post(
            server_url,
            "/traverse",
            {"query": "violin concerto", "doc_id": "v4", "steps": steps},
        )
        assert status == 200
        assert len(body["steps"]) == steps
        assert [s["kappa"] for s in body["steps"]] == list(range(1, steps + 1))
        assert len(body["pca"]["path"]) == steps + 1
        assert len(body["pca"]["gold"]) == 2
        assert 1 <= len(body["pca"]["results"]) <= 10

    def test_malformed_body_400(self, server_url):
        status, body = post_raw(server_url, "/search", b"{not json")
        assert status == 400
        assert body["error"] == "BadRequest"

    def test_missing_field_400(self, server_url):
        status, body = post_raw(server_url, "/search", json.dumps({"k": 3}).encode())
        assert status == 400

    def test_unknown_route_404(self, server_url):
        status, body = get(server_url, "/nope")
        assert status == 404

    def test_unknown_target_404(self, server_url):
        status, body = post_raw(
            server_url,
            "/traverse",
            json.dumps({"query": "violin", "doc_id": "zz", "steps": 3}).encode(),
        )
        assert status == 404

    def test_domain_error_422(self, server_url):
        status, body = post_raw(
            server_url, "/search", json.dumps({"query": "violin", "k": 0}).encode()
        )
        assert status == 422
        assert body["error"] == "BadK"


class TestDeterminismAndConcurrency:
    def test_replaying_a_request_reproduces_bytes(self, server_url):
        body = json.dumps(
            {"query": "violin concerto", "method": "sampling", "n": 5}
        ).encode()

        def raw(path, blob):
            req = urllib.request.Request(
                server_url + path, data=blob,
                headers={"Content-Type": "application/json"}, method="POST",
            )
            with urllib.request.urlopen(req) as resp:
                return resp.read()

        assert raw("/suggest", body) == raw("/suggest", body)
        trav = json.dumps({"query": "violin", "doc_id": "v4", "steps": 4}).encode()
        assert raw("/traverse", trav) == raw("/traverse", trav)

    def test_concurrent_searches_share_one_snapshot(self, server_url):
        results = [None] * 12
        errors = []

        def worker(i):
            try:
                _, body = post(
                    server_url, "/search", {"query": "violin concerto", "k": 4}
                )
                results[i] = json.dumps(body, sort_keys=True)
            except Exception as exc:  # pragma: no cover - diagnostic detail
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(12)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        assert len(set(results)) == 1


class TestSessionLoop:
    def test_search_suggest_click_grows_history(self, server_url):
        _, session = post(server_url, "/session", {})
        sid = session["session_id"]

        _, step1 = post(
            server_url, f"/session/{sid}/step", {"query": "violin concerto"}
        )
        assert step1["history_length"] == 1

        _, sugg = post(
            server_url, "/suggest", {"query": "violin concerto", "method": "rm3", "n": 3}
        )
        chosen = sugg["suggestions"][0]["text"]

        _, step2 = post(
            server_url,
            f"/session/{sid}/step",
            {"query": chosen, "chosen_suggestion": chosen},
        )
        assert step2["history_length"] == 2
        assert step2["result"]["query"] == chosen

        _, state = get(server_url, f"/session/{sid}")
        assert len(state["history"]) == 2
        assert state["history"][1]["chosen_suggestion"] == chosen

    def test_unknown_session_404(self, server_url):
        status, _ = post_raw(
            server_url, "/session/zzz/step", json.dumps({"query": "x"}).encode()
        )
        assert status == 404

    def test_session_ids_deterministic_counter(self, server_url):
        _, a = post(server_url, "/session", {})
        _, b = post(server_url, "/session", {})
        na = int(a["session_id"].split("-")[1])
        nb = int(b["session_id"].split("-")[1])
        assert nb == na + 1


class TestPCA:
    def test_projects_to_two_dims_deterministically(self):
        rng = np.random.default_rng(4)
        groups = {
            "path": rng.standard_normal((5, 32)),
            "gold": rng.standard_normal((1, 32)),
        }
        a = pca_2d(groups)
        b = pca_2d(groups)
        assert a == b
        assert len(a["path"]) == 5 and len(a["path"][0]) == 2

    def test_preserves_collinearity(self):
        # points on a line in high-D stay on a line in the projection
        direction = np.zeros(16)
        direction[3] = 1.0
        base = np.zeros(16)
        pts = np.vstack([base + t * direction for t in np.linspace(0, 1, 7)])
        got = np.array(pca_2d({"path": pts})["path"])
        spread_second = np.ptp(got[:, 1])
        assert spread_second == pytest.approx(0.0, abs=1e-9)
