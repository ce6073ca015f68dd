"""Score oracles: the detector contract plus two analytic reference detectors.

A score oracle maps 8-bit images to the probability that each one is fake.
That is the only access the black-box attack needs, so the same contract
covers in-process reference detectors, the query-counting wrapper, and
remote detectors reached over HTTP (see :mod:`evadebench.client`).

The reference detectors are deliberately linear-then-sigmoid so that every
attack claim about them can be checked in closed form:

* :class:`PatchPoolDetector` scores disjoint square patches independently and
  average-pools, mimicking detectors whose receptive field is a small local
  patch;
* :class:`GlobalLinearDetector` is a single linear functional of the whole
  image, the textbook case with a known optimal L-inf perturbation
  ``-eps * sign(w)``.
"""

from __future__ import annotations

import threading
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import uniform_filter
from scipy.special import expit

from .images import ensure_image, to_norm


class ScoreOracle:
    """Batch scoring contract: images in, probabilities-of-fake out, in order."""

    name = "oracle"

    def score_batch(self, images: Sequence[np.ndarray]) -> list[float]:
        raise NotImplementedError

    def score(self, image: np.ndarray) -> float:
        return self.score_batch([image])[0]

    @property
    def input_spec(self) -> dict:
        """Accepted input shape; ``None`` dimensions mean "any size"."""
        return {"width": None, "height": None, "channels": 3}


class NormScoreOracle(ScoreOracle):
    """Reference detectors: a deterministic function of normalized pixels.

    Subclasses implement ``score_norm`` on float images; ``score_batch``
    converts incoming 8-bit images. ``score_norm`` is a smooth function of
    its input and does not clamp, which makes finite-difference probing at
    the [0, 1] boundary well defined.
    """

    def score_norm(self, nimg: np.ndarray) -> float:
        raise NotImplementedError

    def score_batch(self, images: Sequence[np.ndarray]) -> list[float]:
        return [float(self.score_norm(to_norm(ensure_image(im)))) for im in images]


class PatchPoolDetector(NormScoreOracle):
    """Average-pooled per-patch linear scores squashed through a sigmoid.

    The image is partitioned into disjoint ``patch_side x patch_side`` tiles
    anchored at the top-left corner; right/bottom remainders that do not fill
    a tile are discarded. Each tile gets the linear score
    ``w . flatten(tile) + bias`` and the image score is
    ``sigmoid(mean(tile scores))``.
    """

    def __init__(self, weights, bias: float = 0.0, patch_side: int = 9,
                 channels: Optional[int] = None, name: str = "patch-pool"):
        w = np.asarray(weights, dtype=np.float64).ravel()
        if patch_side < 1:
            raise ValueError("patch_side must be positive")
        if channels is None:
            area = patch_side * patch_side
            if w.size == area:
                channels = 1
            elif w.size == 3 * area:
                channels = 3
            else:
                raise ValueError(
                    f"weights length {w.size} does not match patch_side {patch_side} "
                    f"for 1 or 3 channels")
        if w.size != patch_side * patch_side * channels:
            raise ValueError(
                f"weights length {w.size} != patch_side^2 * channels "
                f"({patch_side}^2 * {channels})")
        self.weights = w
        self.bias = float(bias)
        self.patch_side = int(patch_side)
        self.channels = int(channels)
        self.name = name

    @classmethod
    def random(cls, rng: np.random.Generator, patch_side: int = 9,
               channels: int = 1, scale: float = 1.0, bias: float = 0.0):
        w = rng.normal(0.0, scale, size=patch_side * patch_side * channels)
        return cls(w, bias=bias, patch_side=patch_side, channels=channels)

    @property
    def input_spec(self) -> dict:
        return {"width": None, "height": None, "channels": self.channels}

    def _check_shape(self, nimg: np.ndarray) -> np.ndarray:
        a = np.asarray(nimg, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, np.newaxis]
        if a.ndim != 3 or a.shape[2] != self.channels:
            raise ValueError(f"expected (H, W, {self.channels}) image, got {a.shape}")
        if a.shape[0] < self.patch_side or a.shape[1] < self.patch_side:
            raise ValueError(
                f"image {a.shape[:2]} smaller than one {self.patch_side}x"
                f"{self.patch_side} patch")
        return a

    def _tiles(self, a: np.ndarray) -> np.ndarray:
        """View the covered region as (n_patches, patch_side^2 * channels)."""
        ps = self.patch_side
        nh, nw = a.shape[0] // ps, a.shape[1] // ps
        covered = a[: nh * ps, : nw * ps, :]
        tiles = covered.reshape(nh, ps, nw, ps, self.channels)
        tiles = tiles.transpose(0, 2, 1, 3, 4)
        return tiles.reshape(nh * nw, ps * ps * self.channels)

    def patch_scores(self, nimg: np.ndarray) -> np.ndarray:
        a = self._check_shape(nimg)
        return self._tiles(a) @ self.weights + self.bias

    def score_norm(self, nimg: np.ndarray) -> float:
        return float(expit(np.mean(self.patch_scores(nimg))))

    def pooled_logit(self, nimg: np.ndarray) -> float:
        """The pre-sigmoid pooled score; handy for margin analysis in tests."""
        return float(np.mean(self.patch_scores(nimg)))

    def gradient(self, nimg: np.ndarray) -> np.ndarray:
        """Analytic d(score)/d(pixel) field, same shape as the input.

        Per-patch scores are linear, so inside every covered patch the
        gradient is the weight block scaled by sigma'(pooled) / n_patches;
        remainder pixels outside any full patch get exactly zero.
        """
        a = self._check_shape(nimg)
        ps = self.patch_side
        nh, nw = a.shape[0] // ps, a.shape[1] // ps
        z = np.mean(self.patch_scores(a))
        s = expit(z)
        coeff = s * (1.0 - s) / (nh * nw)
        block = self.weights.reshape(ps, ps, self.channels) * coeff
        grad = np.zeros_like(a)
        grad[: nh * ps, : nw * ps, :] = np.tile(block, (nh, nw, 1))
        return grad


class GlobalLinearDetector(NormScoreOracle):
    """sigmoid(w . flatten(image) + bias) over a fixed input shape."""

    def __init__(self, weights, bias: float = 0.0, shape: tuple = None,
                 name: str = "global-linear"):
        if shape is None:
            w = np.asarray(weights, dtype=np.float64)
            if w.ndim == 2:
                w = w[:, :, np.newaxis]
            if w.ndim != 3:
                raise ValueError("pass shape= or weights already shaped (H, W, C)")
            shape = w.shape
        h, wd, c = shape
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.size != h * wd * c:
            raise ValueError(f"weights length {w.size} != {h}*{wd}*{c}")
        self.weights = w
        self.bias = float(bias)
        self.shape = (int(h), int(wd), int(c))
        self.name = name

    @classmethod
    def random(cls, rng: np.random.Generator, shape: tuple,
               scale: float = 1.0, bias: float = 0.0):
        h, w, c = shape
        return cls(rng.normal(0.0, scale, size=h * w * c), bias=bias, shape=shape)

    @property
    def input_spec(self) -> dict:
        h, w, c = self.shape
        return {"width": w, "height": h, "channels": c}

    def _check_shape(self, nimg: np.ndarray) -> np.ndarray:
        a = np.asarray(nimg, dtype=np.float64)
        if a.ndim == 2:
            a = a[:, :, np.newaxis]
        if a.shape != self.shape:
            raise ValueError(f"expected image of shape {self.shape}, got {a.shape}")
        return a

    def logit(self, nimg: np.ndarray) -> float:
        a = self._check_shape(nimg)
        return float(a.ravel() @ self.weights + self.bias)

    def score_norm(self, nimg: np.ndarray) -> float:
        return float(expit(self.logit(nimg)))

    def gradient(self, nimg: np.ndarray) -> np.ndarray:
        a = self._check_shape(nimg)
        s = expit(self.logit(a))
        return (s * (1.0 - s)) * self.weights.reshape(self.shape)


def box_blur(nimg: np.ndarray, side: int = 9) -> np.ndarray:
    """Per-channel ``side x side`` box (uniform mean) blur, reflect boundary."""
    a = np.asarray(nimg, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, np.newaxis]
    return uniform_filter(a, size=(side, side, 1), mode="reflect")


class BlurredInputDetector(NormScoreOracle):
    """Score a box-blurred copy of the input through a base detector.

    Blurring averages away the high-frequency, per-pixel structure that local
    detectors respond to, which makes this wrapper the harness's stand-in for
    a detector driven by global image statistics.
    """

    def __init__(self, base: NormScoreOracle, blur_side: int = 9):
        self.base = base
        self.blur_side = int(blur_side)
        self.name = f"blurred-{getattr(base, 'name', 'oracle')}"

    @property
    def input_spec(self) -> dict:
        return self.base.input_spec

    def score_norm(self, nimg: np.ndarray) -> float:
        return self.base.score_norm(box_blur(nimg, self.blur_side))


class QueryCounter(ScoreOracle):
    """Wrap an oracle and count one query per image scored, thread-safe."""

    def __init__(self, oracle: ScoreOracle):
        self.oracle = oracle
        self._lock = threading.Lock()
        self._total = 0

    @property
    def total_queries(self) -> int:
        with self._lock:
            return self._total

    def reset(self) -> None:
        with self._lock:
            self._total = 0

    @property
    def name(self):
        return getattr(self.oracle, "name", "oracle")

    @property
    def input_spec(self) -> dict:
        return self.oracle.input_spec

    def score_batch(self, images: Sequence[np.ndarray]) -> list[float]:
        scores = self.oracle.score_batch(images)
        with self._lock:
            self._total += len(images)
        return scores
