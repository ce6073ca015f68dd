"""Score an image by polling a chat model five times for a verdict.

Instead of a probability head, a vision-language endpoint answers "Is this
image real or fake?" with a structured verdict; the score is the fraction
of fake votes across five independent samples, and refusals or malformed
replies are retried a bounded number of times. The demo runs against a tiny
scripted endpoint started in-process, so it works offline and you can see
the retry machinery on the wire.
"""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from evadebench import PROMPT, VlmConfig, classify_zero_shot


def scripted_endpoint(script):
    """A chat-completions endpoint that replays canned behaviors in order."""
    responses = list(script)

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *_):
            pass

        def do_POST(self):
            self.rfile.read(int(self.headers.get("Content-Length") or 0))
            kind = responses.pop(0)
            if kind == "garbled":
                body, status = {"choices": [{"message": {"content": '{"verd'}}]}, 200
            elif kind == "refuse":
                body, status = {"choices": [{"message": {
                    "content": None, "refusal": "I cannot help with that"}}]}, 200
            else:
                content = json.dumps({"verdict": kind, "reason": "texture artifacts"})
                body, status = {"choices": [{"message": {"content": content}}]}, 200
            payload = json.dumps(body).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

    httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=httpd.serve_forever, daemon=True).start()
    host, port = httpd.server_address
    return httpd, f"http://{host}:{port}/v1/chat/completions"

def main():
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    print(f"prompt sent with each sample: {PROMPT!r}\n")

    # five clean votes: 3 fake, 2 real
    httpd, url = scripted_endpoint(["fake", "real", "fake", "real", "fake"])
    out = classify_zero_shot(VlmConfig(endpoint=url, model="mock-vlm"), img)
    httpd.shutdown()
    votes = [v.verdict for v in out.verdicts]
    print(f"verdicts {votes} -> score {out.score} "
          f"({out.requests_made} requests, {out.retries} retries)")

    # a refusal and a garbled reply burn retries, then the jury completes
    httpd, url = scripted_endpoint(
        ["refuse", "garbled", "fake", "fake", "real", "fake", "fake"])
    out = classify_zero_shot(VlmConfig(endpoint=url, model="mock-vlm"), img)
    httpd.shutdown()
    votes = [v.verdict for v in out.verdicts]
    print(f"verdicts {votes} -> score {out.score} "
          f"({out.requests_made} requests, {out.retries} retries)")
    first = out.transcript[0]["sample"]
    print("\nper-attempt transcript of the first sample:")
    for entry in out.transcript:
        if entry["sample"] == first:
            print(f"  attempt {entry['attempt']}: {entry['outcome']}")
    print("\nagainst a live endpoint: set the endpoint URL, model name, and "
          "the VLM_API_KEY environment variable.")


if __name__ == "__main__":
    main()
