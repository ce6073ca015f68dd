"""Zero-shot real/fake scoring through a vision-language chat endpoint.

Protocol: ask the fixed question with the image attached, request a structured
verdict, repeat for a configured number of independent samples, and score the
image as the fraction of "fake" verdicts. A sample that refuses (transport
error, malformed structured output, or an explicit refusal field) is retried
up to a cap; exhausting the cap fails the whole classification with the
partial transcript attached, so missing answers are never papered over.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np
import requests

from .images import encode_png_b64, ensure_image

PROMPT = "Is this image real or fake?"

VERDICT_SCHEMA = {
    "type": "object",
    "properties": {
        "verdict": {"type": "string", "enum": ["real", "fake"]},
        "reason": {"type": "string"},
    },
    "required": ["verdict", "reason"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class VlmVerdict:
    verdict: str
    reason: str

    def __post_init__(self) -> None:
        if self.verdict not in ("real", "fake"):
            raise ValueError(f"verdict must be 'real' or 'fake', got {self.verdict!r}")


@dataclass(frozen=True)
class VlmConfig:
    endpoint: str
    model: str
    samples: int = 5
    max_retries: int = 3
    timeout: float = 60.0
    temperature: float | None = None
    api_key_env: str = "VLM_API_KEY"
    min_request_interval: float = 0.0

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.min_request_interval < 0:
            raise ValueError("min_request_interval must be >= 0")


@dataclass
class VlmClassification:
    """Outcome of one zero-shot classification."""

    score: float
    verdicts: list[VlmVerdict]
    retries: int
    requests_made: int
    transcript: list[dict] = field(default_factory=list)


class VlmRefusal(Exception):
    """One sample did not yield a usable verdict (retryable)."""


class VlmClassificationError(RuntimeError):
    """A sample exhausted its retries; carries the partial transcript."""

    def __init__(self, message: str, transcript: list[dict]):
        super().__init__(message)
        self.transcript = transcript


class RateLimiter:
    """Enforces a minimum wall-clock interval between upstream requests."""

    def __init__(self, min_interval: float):
        self._min_interval = min_interval
        self._lock = threading.Lock()
        self._last = 0.0

    def wait(self) -> None:
        if self._min_interval <= 0:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._last + self._min_interval - now
            if delay > 0:
                time.sleep(delay)
                now = time.monotonic()
            self._last = now


def parse_structured_output(body: object) -> VlmVerdict:
    """Extract the structured verdict from a chat-completion response body.

    Anything other than a choice whose message content is exactly
    ``{"verdict": "real"|"fake", "reason": <string>}`` raises VlmRefusal.
    """
    if not isinstance(body, dict):
        raise VlmRefusal("response body is not an object")
    choices = body.get("choices")
    if not isinstance(choices, list) or not choices:
        raise VlmRefusal("response has no choices")
    message = choices[0].get("message") if isinstance(choices[0], dict) else None
    if not isinstance(message, dict):
        raise VlmRefusal("first choice has no message")
    refusal = message.get("refusal")
    if refusal:
        raise VlmRefusal(f"model refused: {refusal}")
    content = message.get("content")
    if not isinstance(content, str):
        raise VlmRefusal("message content is not text")
    try:
        payload = json.loads(content)
    except json.JSONDecodeError as exc:
        raise VlmRefusal(f"content is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or set(payload) != {"verdict", "reason"}:
        raise VlmRefusal(f"content keys are not exactly verdict/reason: {payload!r}")
    verdict, reason = payload["verdict"], payload["reason"]
    if verdict not in ("real", "fake"):
        raise VlmRefusal(f"verdict is neither 'real' nor 'fake': {verdict!r}")
    if not isinstance(reason, str):
        raise VlmRefusal("reason is not a string")
    return VlmVerdict(verdict=verdict, reason=reason)


class VlmClient:
    """Issues zero-shot classifications against a chat-completions endpoint."""

    def __init__(self, cfg: VlmConfig, session: requests.Session | None = None):
        self.cfg = cfg
        self._session = session or requests.Session()
        self._limiter = RateLimiter(cfg.min_request_interval)

    def _request_body(self, image_b64: str) -> dict:
        body = {
            "model": self.cfg.model,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": PROMPT},
                        {
                            "type": "image_url",
                            "image_url": {"url": f"data:image/png;base64,{image_b64}"},
                        },
                    ],
                }
            ],
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": "real_fake_verdict",
                    "strict": True,
                    "schema": VERDICT_SCHEMA,
                },
            },
        }
        if self.cfg.temperature is not None:
            body["temperature"] = self.cfg.temperature
        return body

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.cfg.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _one_request(self, body: dict) -> VlmVerdict:
        self._limiter.wait()
        try:
            resp = self._session.post(
                self.cfg.endpoint,
                json=body,
                headers=self._headers(),
                timeout=self.cfg.timeout,
            )
        except requests.RequestException as exc:
            raise VlmRefusal(f"transport error: {exc}") from exc
        if resp.status_code != 200:
            raise VlmRefusal(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise VlmRefusal(f"response is not JSON: {exc}") from exc
        return parse_structured_output(payload)

    def classify(self, img: np.ndarray) -> VlmClassification:
        """Score one image as the fraction of "fake" verdicts over samples."""
        img = ensure_image(img)
        image_b64 = encode_png_b64(img)
        body = self._request_body(image_b64)

        verdicts: list[VlmVerdict] = []
        transcript: list[dict] = []
        retries = 0
        requests_made = 0
        for sample in range(self.cfg.samples):
            accepted = None
            for attempt in range(1 + self.cfg.max_retries):
                requests_made += 1
                try:
                    accepted = self._one_request(body)
                except VlmRefusal as refusal:
                    transcript.append(
                        {
                            "sample": sample,
                            "attempt": attempt,
                            "outcome": "refusal",
                            "detail": str(refusal),
                        }
                    )
                    retries += 1
                    continue
                transcript.append(
                    {
                        "sample": sample,
                        "attempt": attempt,
                        "outcome": "accepted",
                        "verdict": accepted.verdict,
                        "reason": accepted.reason,
                    }
                )
                break
            if accepted is None:
                retries -= 1  # the last refusal triggered no further attempt
                raise VlmClassificationError(
                    f"sample {sample} still refused after {self.cfg.max_retries} "
                    f"retries ({len(verdicts)}/{self.cfg.samples} verdicts collected)",
                    transcript,
                )
            verdicts.append(accepted)

        fake_count = sum(1 for v in verdicts if v.verdict == "fake")
        return VlmClassification(
            score=fake_count / self.cfg.samples,
            verdicts=verdicts,
            retries=retries,
            requests_made=requests_made,
            transcript=transcript,
        )


def classify_zero_shot(
    cfg: VlmConfig, img: np.ndarray, session: requests.Session | None = None
) -> VlmClassification:
    return VlmClient(cfg, session=session).classify(img)
