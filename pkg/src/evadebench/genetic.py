"""Gradient-free evasion of a score oracle with a genetic algorithm.

The attack evolves a population of additive perturbations, each bounded by
``epsilon`` in L-inf over normalized pixels, to push a fake-classified image
below the detector's decision threshold. Only query access to the oracle is
required.

Per generation: every candidate is quantized to 8 bits, scored in one oracle
batch (n queries), and assigned the fitness ``log(1 - p_fake + 1e-12)``
(higher is better for the evasion target "real"). The top-k candidates
survive unchanged as elites; the remaining ``n - k`` slots are filled by
crossover of elite pairs followed by mutation. Elites are re-scored every
generation, so a run to exhaustion consumes exactly ``n * (m + 1)`` queries.

Candidates are always scored through their quantized 8-bit form - the form a
real attacker can actually deliver - so the success verdict never relies on
fractional pixel values that would vanish on save.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .images import ensure_image, quantize_batch, to_norm
from .oracles import ScoreOracle

FITNESS_FLOOR = 1e-12


@dataclass(frozen=True)
class GaConfig:
    """Attack hyperparameters; defaults match the harness's standard budget."""

    n: int = 10                    # population size
    m: int = 100                   # max generations
    k: int = 5                     # elite count
    epsilon: float = 10.0 / 255.0  # L-inf bound, normalized units
    p_mut: float = 0.05            # per-element mutation probability
    w_mut: Optional[float] = None  # mutation step magnitude; None -> epsilon / 2
    success_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.k <= self.n):
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.m < 0:
            raise ValueError("m must be >= 0")
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError("epsilon must lie in (0, 1]")
        if not (0.0 <= self.p_mut <= 1.0):
            raise ValueError("p_mut must lie in [0, 1]")
        if self.w_mut is not None and self.w_mut <= 0:
            raise ValueError("w_mut must be positive")

    @property
    def mutation_weight(self) -> float:
        return self.epsilon / 2.0 if self.w_mut is None else self.w_mut


@dataclass
class AttackResult:
    """Outcome of one attack run on one image."""

    success: bool
    adversarial: np.ndarray        # quantized 8-bit image
    queries_used: int
    generations_run: int
    final_score: float             # p_fake of the returned adversarial image
    error: Optional[str] = None


def fitness_from_scores(scores) -> np.ndarray:
    """log-probability of the target class "real", floored away from -inf."""
    p = np.asarray(scores, dtype=np.float64)
    return np.log(1.0 - p + FITNESS_FLOOR)


def init_population(cfg: GaConfig, shape: tuple, rng: np.random.Generator) -> np.ndarray:
    """n perturbations with every element uniform in [-epsilon, +epsilon]."""
    return rng.uniform(-cfg.epsilon, cfg.epsilon, size=(cfg.n,) + tuple(shape))


def select_elites(fitnesses: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k highest-fitness candidates, ties to the lower index."""
    fitnesses = np.asarray(fitnesses, dtype=np.float64)
    if k > fitnesses.size:
        raise ValueError(f"k={k} exceeds population size {fitnesses.size}")
    order = np.argsort(-fitnesses, kind="stable")
    return order[:k]


def crossover(parent_a: np.ndarray, parent_b: np.ndarray,
              fit_a: float, fit_b: float, rng: np.random.Generator) -> np.ndarray:
    """Elementwise inheritance, biased toward the fitter parent.

    Each element comes from parent_a with probability
    ``exp(f_a) / (exp(f_a) + exp(f_b))``, computed as a stable sigmoid of the
    fitness gap. Elements are inherited verbatim, so the child automatically
    stays inside the epsilon ball.
    """
    gap = np.clip(fit_a - fit_b, -500.0, 500.0)
    p_a = 1.0 / (1.0 + np.exp(-gap))
    mask = rng.random(parent_a.shape) < p_a
    return np.where(mask, parent_a, parent_b)


def mutate(cand: np.ndarray, cfg: GaConfig, rng: np.random.Generator) -> np.ndarray:
    """Independent per-element additive steps, then re-clip to the epsilon ball."""
    mask = rng.random(cand.shape) < cfg.p_mut
    w = cfg.mutation_weight
    steps = rng.uniform(-w, w, size=cand.shape)
    return np.clip(cand + mask * steps, -cfg.epsilon, cfg.epsilon)


def _pick_parent_pair(k: int, rng: np.random.Generator) -> tuple[int, int]:
    # distinct elite indices when possible; k == 1 degenerates to self-pairing
    if k >= 2:
        i, j = rng.choice(k, size=2, replace=False)
        return int(i), int(j)
    return 0, 0


def run_attack(oracle: ScoreOracle, image: np.ndarray, cfg: GaConfig) -> AttackResult:
    """Run the full genetic attack on one image.

    The caller should already have verified the image is classified fake
    (p_fake >= success_threshold); the attack itself only drives the score
    down. Query accounting counts images scored: n per generation,
    ``n * (g + 1)`` after g reproduction cycles.
    """
    img = ensure_image(image)
    x = to_norm(img)
    rng = np.random.default_rng(cfg.seed)
    pop = init_population(cfg, x.shape, rng)

    queries = 0
    best_img = img
    best_score = float("nan")
    generations = 0

    for evals in range(cfg.m + 1):
        adv = quantize_batch(np.clip(x[np.newaxis] + pop, 0.0, 1.0))
        try:
            scores = np.asarray(oracle.score_batch(list(adv)), dtype=np.float64)
        except Exception as exc:
            return AttackResult(False, best_img, queries, generations,
                                best_score, error=str(exc))
        queries += cfg.n
        generations = evals
        fit = fitness_from_scores(scores)
        best = int(np.argmax(fit))          # first index on ties
        best_img = adv[best]
        best_score = float(scores[best])
        if best_score < cfg.success_threshold:
            return AttackResult(True, best_img, queries, generations, best_score)
        if evals == cfg.m:
            break

        elite_idx = select_elites(fit, cfg.k)
        next_pop = [pop[i] for i in elite_idx]
        for _ in range(cfg.n - cfg.k):
            a, b = _pick_parent_pair(cfg.k, rng)
            ia, ib = int(elite_idx[a]), int(elite_idx[b])
            child = crossover(pop[ia], pop[ib], float(fit[ia]), float(fit[ib]), rng)
            next_pop.append(mutate(child, cfg, rng))
        pop = np.stack(next_pop)

    return AttackResult(False, best_img, queries, generations, best_score)
