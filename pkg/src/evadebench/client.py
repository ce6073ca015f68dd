"""Client side of the oracle wire protocol: score images on a remote detector."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import requests

from .images import encode_png_b64, ensure_image
from .oracles import ScoreOracle


class RemoteOracleError(Exception):
    """Transport failure or an error response from the remote endpoint."""

    def __init__(self, message: str, status: Optional[int] = None):
        super().__init__(message)
        self.status = status


class OracleProtocolError(RemoteOracleError):
    """The endpoint answered, but violated the wire protocol contract."""


class RemoteOracle(ScoreOracle):
    """A score oracle backed by an HTTP endpoint speaking the wire protocol.

    Responses are validated strictly: wrong length, non-numeric entries, or
    scores outside [0, 1] raise :class:`OracleProtocolError` and no partial
    results are returned.
    """

    def __init__(self, base_url: str, timeout: float = 60.0,
                 session: Optional[requests.Session] = None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._info: Optional[dict] = None
        self.name = f"remote:{self.base_url}"

    def _post(self, path: str, payload: dict) -> dict:
        url = self.base_url + path
        try:
            resp = self._session.post(url, json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise RemoteOracleError(f"request to {url} failed: {exc}") from exc
        try:
            body = resp.json()
        except ValueError as exc:
            raise OracleProtocolError(
                f"non-JSON response from {url} (status {resp.status_code})",
                status=resp.status_code) from exc
        if resp.status_code != 200:
            message = body.get("error") if isinstance(body, dict) else None
            raise RemoteOracleError(
                f"endpoint error (status {resp.status_code}): {message or body}",
                status=resp.status_code)
        if not isinstance(body, dict):
            raise OracleProtocolError(f"expected JSON object from {url}")
        return body

    def info(self) -> dict:
        if self._info is None:
            body = self._post("/v1/info", {})
            if "name" not in body or "input" not in body:
                raise OracleProtocolError("info response missing name/input fields")
            self._info = body
        return self._info

    @property
    def input_spec(self) -> dict:
        return self.info()["input"]

    def score_batch(self, images: Sequence[np.ndarray]) -> list[float]:
        payload = {"images": [encode_png_b64(ensure_image(im)) for im in images]}
        body = self._post("/v1/score_batch", payload)
        scores = body.get("scores")
        if not isinstance(scores, list):
            raise OracleProtocolError('response missing "scores" list')
        if len(scores) != len(images):
            raise OracleProtocolError(
                f"got {len(scores)} scores for {len(images)} images")
        out = []
        for s in scores:
            if not isinstance(s, (int, float)) or isinstance(s, bool):
                raise OracleProtocolError(f"non-numeric score {s!r}")
            s = float(s)
            if not (0.0 <= s <= 1.0):
                raise OracleProtocolError(f"score {s} outside [0, 1]")
            out.append(s)
        return out


def remote_score(endpoint: str, images: Sequence[np.ndarray],
                 timeout: float = 60.0) -> list[float]:
    """One-shot batch scoring against a remote oracle endpoint."""
    return RemoteOracle(endpoint, timeout=timeout).score_batch(images)
