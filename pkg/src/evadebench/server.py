"""HTTP endpoint exposing a score oracle over the wire protocol.

The protocol, shared by every server and client in this harness:

* ``POST /v1/score_batch`` with body ``{"images": ["<base64 PNG>", ...]}``
  returns ``{"scores": [p_fake, ...]}`` in request order;
* ``POST /v1/info`` returns
  ``{"name": str, "input": {"width": int|null, "height": int|null, "channels": int}}``;
* every error is ``{"error": "<message>"}`` with a non-200 status.

All images in a request are decoded before any of them is scored, so a
malformed request never produces partial scores (and never advances a
query counter wrapped around the oracle).
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .images import decode_png_b64
from .oracles import ScoreOracle

MAX_BODY_BYTES = 64 * 1024 * 1024


class _OracleRequestHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # keep test output clean
        pass

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> bytes:
        """Drain the request body; must happen before replying on a
        keep-alive connection or leftover bytes corrupt the next request."""
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            raise ValueError("request body too large")
        return self.rfile.read(length)

    def do_POST(self):
        oracle: ScoreOracle = self.server.oracle
        try:
            raw = self._read_body()
        except Exception as exc:
            self.close_connection = True
            self._reply(400, {"error": f"unreadable request body: {exc}"})
            return
        if self.path == "/v1/info":
            self._reply(200, {"name": getattr(oracle, "name", "oracle"),
                              "input": oracle.input_spec})
            return
        if self.path != "/v1/score_batch":
            self._reply(404, {"error": f"unknown endpoint {self.path}"})
            return
        try:
            body = json.loads(raw.decode("utf-8"))
        except Exception as exc:
            self._reply(400, {"error": f"malformed request body: {exc}"})
            return
        if not isinstance(body, dict) or not isinstance(body.get("images"), list):
            self._reply(400, {"error": 'request body must be {"images": [...]}'})
            return
        try:
            images = [decode_png_b64(item) for item in body["images"]]
        except Exception as exc:
            self._reply(400, {"error": f"image decode failed: {exc}"})
            return
        try:
            scores = oracle.score_batch(images)
        except ValueError as exc:
            self._reply(400, {"error": str(exc)})
            return
        except Exception as exc:
            self._reply(500, {"error": f"oracle failure: {exc}"})
            return
        self._reply(200, {"scores": [float(s) for s in scores]})

    def do_GET(self):
        self._reply(405, {"error": "use POST"})


class OracleServer:
    """A score oracle bound to a local HTTP port, served from a daemon thread."""

    def __init__(self, oracle: ScoreOracle, host: str = "127.0.0.1", port: int = 0):
        self.oracle = oracle
        self._httpd = ThreadingHTTPServer((host, port), _OracleRequestHandler)
        self._httpd.oracle = oracle
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> "OracleServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "OracleServer":
        return self

    def __exit__(self, *exc_info) -> None:
        self.stop()


def serve(oracle: ScoreOracle, host: str = "127.0.0.1", port: int = 0) -> OracleServer:
    """Bind and start serving an oracle; returns the running server handle."""
    return OracleServer(oracle, host=host, port=port).start()
