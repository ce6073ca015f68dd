"""Score-oracle wire protocol: server behavior and client validation."""

import numpy as np
import pytest
import requests

from evadebench import (
    GlobalLinearDetector,
    OracleProtocolError,
    PatchPoolDetector,
    QueryCounter,
    RemoteOracle,
    RemoteOracleError,
    encode_png_b64,
    remote_score,
    serve,
)

from conftest import check_wire_conformance


@pytest.fixture
def patch_server(rng):
    oracle = PatchPoolDetector.random(rng, patch_side=9)
    with serve(oracle) as server:
        yield server, oracle


class TestServerProtocol:
    def test_wire_conformance(self, patch_server):
        server, _ = patch_server
        check_wire_conformance(server.url)

    def test_scores_match_in_process(self, patch_server, rng):
        server, oracle = patch_server
        imgs = [rng.integers(0, 256, size=(27, 27, 1), dtype=np.uint8)
                for _ in range(5)]
        remote = RemoteOracle(server.url)
        got = remote.score_batch(imgs)
        want = oracle.score_batch(imgs)
        assert got == pytest.approx(want, abs=1e-9)

    def test_order_preserved(self, patch_server, rng):
        server, oracle = patch_server
        imgs = [rng.integers(0, 256, size=(18, 18, 1), dtype=np.uint8)
                for _ in range(6)]
        remote = RemoteOracle(server.url)
        got = remote.score_batch(imgs)
        for i, img in enumerate(imgs):
            assert got[i] == pytest.approx(oracle.score_batch([img])[0], abs=1e-9)

    def test_shape_error_travels_as_400(self, rng):
        oracle = GlobalLinearDetector.random(rng, shape=(8, 8, 1))
        with serve(oracle) as server:
            resp = requests.post(
                f"{server.url}/v1/score_batch",
                json={"images": [encode_png_b64(np.zeros((4, 4, 1), dtype=np.uint8))]},
                timeout=10,
            )
            assert resp.status_code == 400
            assert "error" in resp.json()

    def test_no_partial_scoring_on_bad_image(self, rng):
        # one undecodable image in the batch: nothing must reach the oracle
        oracle = QueryCounter(PatchPoolDetector.random(rng, patch_side=9))
        good = encode_png_b64(np.zeros((9, 9, 1), dtype=np.uint8))
        with serve(oracle) as server:
            resp = requests.post(
                f"{server.url}/v1/score_batch",
                json={"images": [good, "bad-base64!!"]},
                timeout=10,
            )
            assert resp.status_code == 400
        assert oracle.total_queries == 0

    def test_info_reports_input_spec(self, rng):
        oracle = GlobalLinearDetector.random(rng, shape=(16, 24, 3))
        with serve(oracle) as server:
            info = RemoteOracle(server.url).info()
        assert info["input"] == {"width": 24, "height": 16, "channels": 3}

    def test_keepalive_connection_reuse(self, patch_server, rng):
        # several sequential calls over one session must all succeed
        server, _ = patch_server
        remote = RemoteOracle(server.url)
        img = rng.integers(0, 256, size=(9, 9, 1), dtype=np.uint8)
        remote.info()
        for _ in range(4):
            scores = remote.score_batch([img])
            assert len(scores) == 1


class TestRemoteOracleClient:
    def test_connection_refused_raises(self):
        remote = RemoteOracle("http://127.0.0.1:1", timeout=0.5)
        with pytest.raises(RemoteOracleError):
            remote.score_batch([np.zeros((4, 4, 1), dtype=np.uint8)])

    def test_rejects_score_count_mismatch(self, monkeypatch, patch_server, rng):
        server, _ = patch_server
        remote = RemoteOracle(server.url)
        monkeypatch.setattr(remote, "_post", lambda *a, **k: {"scores": [0.5]})
        with pytest.raises(OracleProtocolError):
            remote.score_batch([np.zeros((9, 9, 1), dtype=np.uint8)] * 2)

    def test_rejects_out_of_range_scores(self, monkeypatch, patch_server):
        server, _ = patch_server
        remote = RemoteOracle(server.url)
        monkeypatch.setattr(remote, "_post", lambda *a, **k: {"scores": [1.5]})
        with pytest.raises(OracleProtocolError):
            remote.score_batch([np.zeros((9, 9, 1), dtype=np.uint8)])

    def test_rejects_non_numeric_scores(self, monkeypatch, patch_server):
        server, _ = patch_server
        remote = RemoteOracle(server.url)
        monkeypatch.setattr(remote, "_post", lambda *a, **k: {"scores": [True]})
        with pytest.raises(OracleProtocolError):
            remote.score_batch([np.zeros((9, 9, 1), dtype=np.uint8)])

    def test_server_error_message_surfaced(self, rng):
        oracle = GlobalLinearDetector.random(rng, shape=(8, 8, 1))
        with serve(oracle) as server:
            remote = RemoteOracle(server.url)
            with pytest.raises(RemoteOracleError, match="expected image of shape"):
                remote.score_batch([np.zeros((4, 4, 1), dtype=np.uint8)])

    def test_remote_score_convenience(self, patch_server, rng):
        server, oracle = patch_server
        img = rng.integers(0, 256, size=(9, 9, 1), dtype=np.uint8)
        got = remote_score(server.url, [img])
        assert got == pytest.approx(oracle.score_batch([img]), abs=1e-9)

    def test_input_spec_property(self, rng):
        oracle = GlobalLinearDetector.random(rng, shape=(8, 8, 1))
        with serve(oracle) as server:
            remote = RemoteOracle(server.url)
            assert remote.input_spec == {"width": 8, "height": 8, "channels": 1}
