"""Batch attack-and-evaluate pipeline over a frame manifest.

Scores every frame, attacks only the pre-attack true positives (fake frames
the oracle already catches at the threshold), re-scores, and reports benign
vs. attacked metrics together with attack success rate and mean query count.
Per-frame work is seeded from (global seed, frame index), so results do not
depend on worker scheduling.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .client import RemoteOracle
from .genetic import AttackResult, GaConfig, run_attack
from .images import ensure_image, load_png, save_png
from .metrics import (
    LABEL_FAKE,
    EvaluationReport,
    ScoredSample,
    attack_success_rate,
    evaluate,
    mean_queries,
)
from .oracles import (
    BlurredInputDetector,
    GlobalLinearDetector,
    NormScoreOracle,
    PatchPoolDetector,
    ScoreOracle,
)
from .pgd import PgdConfig, run_pgd
from .typographic import DecoyPathTemplate, OverlaySpec, composite_overlay, generate_decoy_path

ATTACK_KINDS = ("genetic", "pgd", "typographic", "none")

BUILTIN_ORACLES = ("builtin:patch", "builtin:patch-blurred", "builtin:linear")


def item_seed(global_seed: int, index: int) -> int:
    """Stable per-item seed so frames are independent yet reproducible."""
    state = np.random.SeedSequence(global_seed, spawn_key=(index,)).generate_state(2)
    return int(state[0]) ^ (int(state[1]) << 32)


def resolve_oracle(
    name: str,
    shape: tuple[int, int, int] | None = None,
    seed: int = 0,
    timeout: float = 60.0,
) -> ScoreOracle:
    """Build an oracle from a CLI-style reference.

    ``builtin:patch``, ``builtin:patch-blurred``, and ``builtin:linear`` are
    seeded in-process detectors (the linear one needs the image shape);
    anything starting with http(s):// becomes a remote wire-protocol client.
    """
    if name.startswith(("http://", "https://")):
        return RemoteOracle(name, timeout=timeout)
    rng = np.random.default_rng(seed)
    if name in ("builtin:patch", "builtin:patch-blurred"):
        channels = shape[2] if shape is not None else 1
        weights = rng.normal(0.0, 0.6, size=9 * 9 * channels)
        # Center the detector at mid-gray so scores spread on either side
        # of 0.5 instead of saturating.
        detector = PatchPoolDetector(weights, bias=-0.5 * float(weights.sum()),
                                     patch_side=9, channels=channels)
        if name.endswith("blurred"):
            return BlurredInputDetector(detector, blur_side=9)
        return detector
    if name == "builtin:linear":
        if shape is None:
            raise ValueError("builtin:linear needs the input image shape")
        size = int(np.prod(shape))
        weights = rng.normal(0.0, 0.05, size=size)
        return GlobalLinearDetector(weights, bias=-0.5 * float(weights.sum()),
                                    shape=shape)
    raise ValueError(
        f"unknown oracle {name!r}; use one of {BUILTIN_ORACLES} or an http(s) URL"
    )


@dataclass(frozen=True)
class Frame:
    id: str
    label: int  # 1 = fake, 0 = real
    image: np.ndarray
    path: str = ""


def load_frames(manifest_entries: list[dict], base_dir: str | Path) -> list[Frame]:
    """Materialize manifest rows into frames; paths resolve against base_dir."""
    base = Path(base_dir)
    frames = []
    for entry in manifest_entries:
        rel = Path(entry["frame_path"])
        path = rel if rel.is_absolute() else base / rel
        label = LABEL_FAKE if entry["label"] == "fake" else 0
        frames.append(
            Frame(
                id=str(entry.get("id", entry["frame_path"])),
                label=label,
                image=load_png(path),
                path=str(path),
            )
        )
    ids = [f.id for f in frames]
    if len(set(ids)) != len(ids):
        raise ValueError("manifest frame ids are not unique")
    return frames


@dataclass
class ItemLog:
    index: int
    id: str
    label: int
    benign_score: float
    attacked: bool
    post_score: float
    queries: int
    seed: int | None = None
    success: bool | None = None
    generations: int | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        record = {
            "index": self.index,
            "id": self.id,
            "label": self.label,
            "benign_score": self.benign_score,
            "attacked": self.attacked,
            "post_score": self.post_score,
            "queries": self.queries,
        }
        if self.seed is not None:
            record["seed"] = self.seed
        if self.success is not None:
            record["success"] = self.success
        if self.generations is not None:
            record["generations"] = self.generations
        if self.error is not None:
            record["error"] = self.error
        record.update(self.extra)
        return record


@dataclass
class PipelineResult:
    benign: EvaluationReport
    attacked: EvaluationReport
    asr: float | None
    nq: float | None
    items: list[ItemLog]
    adversarial: dict[str, np.ndarray]
    failures: int
    threshold: float

    def report_dict(self) -> dict:
        return {
            "benign": self.benign.to_dict(),
            "attacked": self.attacked.to_dict(),
            "asr": self.asr,
            "nq": self.nq,
            "failures": self.failures,
            "threshold": self.threshold,
        }


def _attack_one(
    frame: Frame,
    index: int,
    oracle: ScoreOracle,
    kind: str,
    benign_score: float,
    seed: int,
    ga_cfg: GaConfig,
    pgd_cfg: PgdConfig,
    overlay: OverlaySpec | None,
    template: DecoyPathTemplate,
) -> tuple[AttackResult | None, ItemLog]:
    log = ItemLog(
        index=index,
        id=frame.id,
        label=frame.label,
        benign_score=benign_score,
        attacked=True,
        post_score=benign_score,
        queries=0,
        seed=seed,
    )
    if kind == "genetic":
        result = run_attack(oracle, frame.image, dataclasses.replace(ga_cfg, seed=seed))
    elif kind == "pgd":
        result = run_pgd(oracle, frame.image, dataclasses.replace(pgd_cfg, seed=seed))
    elif kind == "typographic":
        rng = np.random.default_rng(seed)
        base = overlay if overlay is not None else OverlaySpec(text="")
        height, width = frame.image.shape[:2]
        cell = base.cell_px
        usable = width - 2 * base.margin
        text = generate_decoy_path(
            template, rng, max_width_px=usable,
            point_size=base.point_size, dpi=base.dpi,
        )
        spec = dataclasses.replace(base, text=text)
        adversarial = composite_overlay(frame.image, spec)
        score = float(oracle.score_batch([adversarial])[0])
        result = AttackResult(
            success=score < 0.5,
            adversarial=adversarial,
            queries_used=1,
            generations_run=0,
            final_score=score,
        )
        log.extra["overlay_text"] = text
        log.extra["overlay_cell_px"] = cell
    else:
        raise ValueError(f"unknown attack kind {kind!r}")

    log.post_score = float(result.final_score)
    log.queries = int(result.queries_used)
    log.success = bool(result.success)
    log.generations = int(result.generations_run)
    if result.error is not None:
        log.error = result.error
    return result, log


def pipeline_attack_and_eval(
    frames: list[Frame],
    oracle: ScoreOracle,
    kind: str,
    threshold: float = 0.5,
    global_seed: int = 0,
    ga_cfg: GaConfig | None = None,
    pgd_cfg: PgdConfig | None = None,
    overlay: OverlaySpec | None = None,
    template: DecoyPathTemplate | None = None,
    workers: int = 1,
) -> PipelineResult:
    """Benign-score, attack true positives, re-score, and report both sides.

    ``kind`` is one of genetic | pgd | typographic | none. Frames whose
    attack raises are logged with the error and excluded from the attacked
    report (counted in ``failures``), never silently dropped.
    """
    if kind not in ATTACK_KINDS:
        raise ValueError(f"attack kind must be one of {ATTACK_KINDS}, got {kind!r}")
    if not frames:
        raise ValueError("no frames to evaluate")
    ga_cfg = ga_cfg or GaConfig(success_threshold=threshold)
    pgd_cfg = pgd_cfg or PgdConfig(success_threshold=threshold)
    template = template or DecoyPathTemplate()

    benign_scores = [float(s) for s in oracle.score_batch([f.image for f in frames])]

    def needs_attack(frame: Frame, score: float) -> bool:
        return kind != "none" and frame.label == LABEL_FAKE and score >= threshold

    jobs = [
        (i, frame, benign_scores[i])
        for i, frame in enumerate(frames)
        if needs_attack(frame, benign_scores[i])
    ]

    def run_job(job):
        i, frame, score = job
        seed = item_seed(global_seed, i)
        try:
            return i, _attack_one(
                frame, i, oracle, kind, score, seed, ga_cfg, pgd_cfg,
                overlay, template,
            )
        except Exception as exc:  # logged and excluded, never dropped
            log = ItemLog(
                index=i, id=frame.id, label=frame.label, benign_score=score,
                attacked=True, post_score=score, queries=0, seed=seed,
                error=f"{type(exc).__name__}: {exc}",
            )
            return i, (None, log)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = dict(pool.map(run_job, jobs))
    else:
        outcomes = dict(run_job(job) for job in jobs)

    items: list[ItemLog] = []
    adversarial: dict[str, np.ndarray] = {}
    post_samples: list[ScoredSample] = []
    pre_samples: list[ScoredSample] = []
    attack_queries: list[int] = []
    failures = 0
    for i, frame in enumerate(frames):
        pre = ScoredSample(id=frame.id, score=benign_scores[i], label=frame.label)
        if i in outcomes:
            result, log = outcomes[i]
            items.append(log)
            if result is None or result.error is not None:
                failures += 1
                continue
            adversarial[frame.id] = ensure_image(result.adversarial)
            pre_samples.append(pre)
            post_samples.append(
                ScoredSample(id=frame.id, score=log.post_score, label=frame.label)
            )
            attack_queries.append(log.queries)
        else:
            items.append(
                ItemLog(
                    index=i, id=frame.id, label=frame.label,
                    benign_score=benign_scores[i], attacked=False,
                    post_score=benign_scores[i], queries=0,
                )
            )
            pre_samples.append(pre)
            post_samples.append(
                ScoredSample(id=frame.id, score=benign_scores[i], label=frame.label)
            )

    benign_report = evaluate(
        [ScoredSample(id=f.id, score=benign_scores[i], label=f.label)
         for i, f in enumerate(frames)],
        threshold=threshold,
    )
    attacked_report = evaluate(post_samples, threshold=threshold)

    if not jobs:
        asr = None  # nothing was attacked; 0.0 would misread as "attack failed"
    else:
        try:
            asr = attack_success_rate(pre_samples, post_samples, threshold=threshold)
        except ValueError:
            asr = None
    nq = mean_queries(attack_queries) if attack_queries else None

    return PipelineResult(
        benign=benign_report,
        attacked=attacked_report,
        asr=asr,
        nq=nq,
        items=items,
        adversarial=adversarial,
        failures=failures,
        threshold=threshold,
    )


def write_pipeline_outputs(out_dir: str | Path, result: PipelineResult) -> list[str]:
    """Write log.jsonl, report.json, and attacked PNGs; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    log_path = out / "log.jsonl"
    with open(log_path, "w", encoding="utf-8") as fh:
        for item in result.items:
            fh.write(json.dumps(item.to_dict(), sort_keys=True) + "\n")
    written.append(str(log_path))

    report_path = out / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(result.report_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(str(report_path))

    if result.adversarial:
        adv_dir = out / "attacked"
        adv_dir.mkdir(exist_ok=True)
        for frame_id, img in result.adversarial.items():
            safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in frame_id)
            path = adv_dir / f"{safe}.png"
            save_png(path, img)
            written.append(str(path))
    return written
