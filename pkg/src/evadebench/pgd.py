"""White-box L-inf projected gradient descent against gradient-capable oracles.

Used with :class:`~evadebench.oracles.PatchPoolDetector` this exposes the
patch structure directly: the analytic gradient is zero outside covered
patches and repeats the same weight block inside every patch, so the
accumulated perturbation shows the detector's patch grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .images import ensure_image, from_norm, to_norm
from .genetic import AttackResult


@dataclass(frozen=True)
class PgdConfig:
    epsilon: float = 10.0 / 255.0
    step: Optional[float] = None   # per-iteration step size; None -> epsilon / 4
    iters: int = 40
    random_start: bool = False
    seed: int = 0
    success_threshold: float = 0.5

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.iters < 0:
            raise ValueError("iters must be >= 0")

    @property
    def step_size(self) -> float:
        return self.epsilon / 4.0 if self.step is None else self.step


def run_pgd(oracle, image: np.ndarray, cfg: PgdConfig) -> AttackResult:
    """Iterated signed-gradient descent on p_fake with projection.

    Each step moves ``-step * sign(d p_fake / d pixel)`` (sign(0) is 0, so
    zero-gradient pixels are never touched), then projects onto the epsilon
    ball around the input and the [0, 1] box. The oracle must expose
    ``gradient(nimg)`` and ``score_norm(nimg)``; this is in-process white-box
    access, so no queries are counted.
    """
    if not hasattr(oracle, "gradient"):
        raise TypeError(f"oracle {oracle!r} does not expose an analytic gradient")
    img = ensure_image(image)
    x0 = to_norm(img)
    x = x0.copy()
    if cfg.random_start:
        rng = np.random.default_rng(cfg.seed)
        x = np.clip(x0 + rng.uniform(-cfg.epsilon, cfg.epsilon, size=x0.shape), 0.0, 1.0)

    alpha = cfg.step_size
    for _ in range(cfg.iters):
        g = np.asarray(oracle.gradient(x), dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient values")
        x = x - alpha * np.sign(g)
        x = x0 + np.clip(x - x0, -cfg.epsilon, cfg.epsilon)
        x = np.clip(x, 0.0, 1.0)

    adv = from_norm(x)
    final = float(oracle.score_norm(to_norm(adv)))
    return AttackResult(success=final < cfg.success_threshold, adversarial=adv,
                        queries_used=0, generations_run=cfg.iters,
                        final_score=final)


def finite_diff_gradient(score_fn: Callable[[np.ndarray], float],
                         nimg: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar score over every pixel.

    The independent numerical check for analytic detector gradients; O(2 *
    pixels) score evaluations, so keep test images small.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.array(nimg, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        up = score_fn(x)
        flat[j] = orig - h
        down = score_fn(x)
        flat[j] = orig
        gflat[j] = (up - down) / (2.0 * h)
    return grad
