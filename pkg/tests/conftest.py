"""Shared fixtures: deterministic images, a scripted chat endpoint for the
zero-shot classifier tests, and the wire-protocol conformance checks reused
against every score-oracle server implementation."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest
import requests

from evadebench import encode_png_b64


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gray_image(rng):
    return rng.integers(0, 256, size=(64, 64, 1), dtype=np.uint8)


@pytest.fixture
def rgb_image(rng):
    return rng.integers(0, 256, size=(32, 48, 3), dtype=np.uint8)


def pytest_runtest_logreport(report):
    # Emit one verdict line per acceptance criterion so the acceptance run
    # reads as a checklist.
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    verdict = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    print(f"\n[ACCEPTANCE {verdict}] {name}")


# --- scripted chat-completions endpoint -------------------------------------


def _chat_ok(verdict: str, reason: str = "looks synthetic") -> tuple[int, dict]:
    content = json.dumps({"verdict": verdict, "reason": reason})
    return 200, {"choices": [{"message": {"content": content, "refusal": None}}]}


def make_chat_response(behavior: str) -> tuple[int, object]:
    """Map a scripted behavior name to (status, body)."""
    if behavior in ("real", "fake"):
        return _chat_ok(behavior)
    if behavior == "refusal_field":
        return 200, {"choices": [{"message": {"content": None,
                                              "refusal": "cannot assist"}}]}
    if behavior == "unsure_verdict":
        content = json.dumps({"verdict": "unsure", "reason": "hard to say"})
        return 200, {"choices": [{"message": {"content": content}}]}
    if behavior == "missing_keys":
        return 200, {"choices": [{"message": {"content": json.dumps({"verdict": "fake"})}}]}
    if behavior == "truncated_json":
        return 200, {"choices": [{"message": {"content": '{"verdict": "fa'}}]}
    if behavior == "http_500":
        return 500, {"error": "upstream exploded"}
    if behavior == "not_json":
        return 200, "plain text, not an object"
    raise AssertionError(f"unknown scripted behavior {behavior!r}")


class ScriptedChatServer:
    """Serves canned chat-completion responses in script order.

    Each request pops the next behavior; the script must be long enough for
    the expected request count. All received request bodies are kept for
    assertions.
    """

    def __init__(self, script: list[str]):
        self.script = list(script)
        self.requests: list[dict] = []
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, fmt, *args):
                pass

            def do_POST(self):
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length)
                with outer._lock:
                    try:
                        outer.requests.append(json.loads(raw.decode("utf-8")))
                    except ValueError:
                        outer.requests.append({"_raw": raw.decode("utf-8", "replace")})
                    if not outer.script:
                        status, body = 500, {"error": "script exhausted"}
                    else:
                        status, body = make_chat_response(outer.script.pop(0))
                if isinstance(body, str):
                    payload = body.encode("utf-8")
                    ctype = "text/plain"
                else:
                    payload = json.dumps(body).encode("utf-8")
                    ctype = "application/json"
                self.send_response(status)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._httpd.daemon_threads = True
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}/v1/chat/completions"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc_info):
        self._httpd.shutdown()
        self._httpd.server_close()
        self._thread.join(timeout=5)


@pytest.fixture
def chat_server():
    return ScriptedChatServer


# --- wire-protocol conformance, shared across server implementations --------


def check_wire_conformance(base_url: str, *, expected_constant: float | None = None,
                           timeout: float = 10.0) -> None:
    """Assert a score server speaks the oracle wire protocol exactly.

    Field names, status codes, and error envelopes must match; when
    ``expected_constant`` is given, every returned score must equal it to
    1e-6 (the constant-stub contract).
    """
    session = requests.Session()

    def post(path, body=None, raw=None):
        url = base_url.rstrip("/") + path
        if raw is not None:
            return session.post(url, data=raw,
                                headers={"Content-Type": "application/json"},
                                timeout=timeout)
        return session.post(url, json=body, timeout=timeout)

    # info shape
    resp = post("/v1/info", body={})
    assert resp.status_code == 200, resp.text
    info = resp.json()
    assert set(info) >= {"name", "input"}
    assert set(info["input"]) == {"width", "height", "channels"}
    assert info["input"]["channels"] in (1, 3)

    # empty batch -> empty scores
    resp = post("/v1/score_batch", body={"images": []})
    assert resp.status_code == 200, resp.text
    assert resp.json() == {"scores": []}

    # a real batch: channel count taken from info, free size if unconstrained
    ch = info["input"]["channels"]
    h = info["input"]["height"] or 32
    w = info["input"]["width"] or 32
    rng = np.random.default_rng(99)
    imgs = [rng.integers(0, 256, size=(h, w, ch), dtype=np.uint8) for _ in range(4)]
    resp = post("/v1/score_batch", body={"images": [encode_png_b64(i) for i in imgs]})
    assert resp.status_code == 200, resp.text
    scores = resp.json()["scores"]
    assert isinstance(scores, list) and len(scores) == 4
    for s in scores:
        assert isinstance(s, (int, float)) and 0.0 <= s <= 1.0
    if expected_constant is not None:
        for s in scores:
            assert abs(s - expected_constant) <= 1e-6

    # malformed JSON body -> 400 with an error envelope
    resp = post("/v1/score_batch", raw=b"{nope")
    assert resp.status_code == 400, resp.text
    assert "error" in resp.json()

    # wrong body shape -> 400
    resp = post("/v1/score_batch", body={"imgs": []})
    assert resp.status_code == 400
    assert "error" in resp.json()

    # invalid base64 -> 400
    resp = post("/v1/score_batch", body={"images": ["!!!not-base64!!!"]})
    assert resp.status_code == 400
    assert "error" in resp.json()

    # valid base64 of non-PNG bytes -> 400
    import base64 as b64mod

    resp = post("/v1/score_batch",
                body={"images": [b64mod.b64encode(b"not a png").decode()]})
    assert resp.status_code == 400
    assert "error" in resp.json()

    # unknown path -> 404
    resp = post("/v1/nothing", body={})
    assert resp.status_code == 404
    assert "error" in resp.json()

    # GET -> 405
    resp = session.get(base_url.rstrip("/") + "/v1/score_batch", timeout=timeout)
    assert resp.status_code == 405
    assert "error" in resp.json()
