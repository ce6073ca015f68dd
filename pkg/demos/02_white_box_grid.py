"""The tell-tale grid a patch-pooled detector leaves in white-box attacks.

A detector that averages scores over disjoint 9x9 tiles has a gradient with
the same tiled structure — and a gradient-sign attack inherits it. This demo
runs the iterative sign attack, verifies the perturbation is zero on the
rows/columns no tile covers, checks every tile pushes against its weights,
and writes before/after/delta images you can eyeball.
"""

from pathlib import Path

import numpy as np

from evadebench import PatchPoolDetector, PgdConfig, run_pgd, save_png

OUT = Path(__file__).parent / "out"


def main():
    rng = np.random.default_rng(3)
    det = PatchPoolDetector.random(rng, patch_side=9)
    # 21 is deliberately not a multiple of 9: a 3-pixel L-shaped remainder
    # is outside every tile and must never change
    x = rng.integers(0, 256, size=(21, 21, 1), dtype=np.uint8)

    cfg = PgdConfig()
    result = run_pgd(det, x, cfg)
    delta = result.adversarial.astype(int) - x.astype(int)

    print(f"benign score {det.score_batch([x])[0]:.4f} -> "
          f"attacked {result.final_score:.4f} in {cfg.iters} steps "
          f"({result.queries_used} oracle queries: white-box is free)\n")

    covered = delta[:18, :18, 0]
    remainder_r, remainder_c = delta[18:, :, 0], delta[:18, 18:, 0]
    print(f"remainder pixels changed: {np.count_nonzero(remainder_r) + np.count_nonzero(remainder_c)}"
          f" (tiles cover only the top-left 18x18)")
    print(f"covered pixels changed:   {np.count_nonzero(covered)} of {covered.size}")

    block = det.weights.reshape(9, 9)
    aligned = all(
        np.all(delta[r:r + 9, c:c + 9, 0] * np.sign(block) <= 0)
        for r in (0, 9) for c in (0, 9)
    )
    print(f"every tile's perturbation opposes its weight signs: {aligned}")

    OUT.mkdir(exist_ok=True)
    save_png(OUT / "grid_before.png", x)
    save_png(OUT / "grid_after.png", result.adversarial)
    heat = np.abs(delta).astype(np.float64)
    heat = (255 * heat / max(heat.max(), 1)).astype(np.uint8)
    save_png(OUT / "grid_delta.png", heat)
    print(f"\nwrote {OUT}/grid_before.png, grid_after.png, grid_delta.png "
          f"(the delta shows the 9x9 tiling and the untouched border)")


if __name__ == "__main__":
    main()
