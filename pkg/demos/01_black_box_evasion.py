"""Evade a detector you can only query.

The attacker here never sees weights or gradients: it submits images, reads
back probability-of-fake scores, and breeds an epsilon-bounded perturbation
population toward the "real" verdict. The demo shows the two outcomes that
matter operationally: a successful flip with its query bill, and a hardened
detector that survives the full budget at an exactly predictable cost.
"""

import numpy as np

from evadebench import (
    GaConfig,
    GlobalLinearDetector,
    QueryCounter,
    linf_distance,
    run_attack,
    to_norm,
)


def build_detector(rng, shape, margin_logits):
    """A linear probe whose benign logit sits `margin_logits` above zero for
    the specific image we attack, so difficulty is set explicitly."""
    det = GlobalLinearDetector.random(rng, shape=shape, scale=0.05)
    x = rng.integers(0, 256, size=shape, dtype=np.uint8)
    logit0 = float(det.weights @ to_norm(x).ravel())
    det = GlobalLinearDetector(det.weights, shape=shape, bias=-logit0 + margin_logits)
    return det, x


def main():
    rng = np.random.default_rng(42)
    shape = (64, 64, 1)
    cfg = GaConfig(seed=7)
    print(f"budget: population {cfg.n} x (generations {cfg.m} + initial "
          f"scoring) = {cfg.n * (cfg.m + 1)} queries, "
          f"epsilon {cfg.epsilon:.4f}\n")

    # --- a detector with a modest decision margin: expect a flip -------------
    det, x = build_detector(rng, shape, margin_logits=0.3)
    oracle = QueryCounter(det)
    benign = oracle.score_batch([x])[0]
    print(f"[soft target] benign score {benign:.4f} -> detected as fake")

    result = run_attack(oracle, x, cfg)
    print(f"  success={result.success} after {result.queries_used} queries "
          f"({result.generations_run} generations)")
    print(f"  final score {result.final_score:.4f}, "
          f"L-inf distance {linf_distance(x, result.adversarial):.4f} "
          f"(bound {cfg.epsilon:.4f} + quantization)")
    print(f"  oracle confirms {oracle.total_queries} queries billed\n")

    # --- a hardened detector: exhaustion with exact accounting ---------------
    det, x = build_detector(rng, shape, margin_logits=50.0)
    oracle = QueryCounter(det)
    result = run_attack(oracle, x, cfg)
    print(f"[hard target]  success={result.success} "
          f"(score stuck at {result.final_score:.4f})")
    print(f"  exhausted exactly {result.queries_used} queries; "
          f"counter agrees: {oracle.total_queries}")


if __name__ == "__main__":
    main()
