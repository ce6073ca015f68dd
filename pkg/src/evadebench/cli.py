"""Command-line entry point.

Subcommands: split, serve, attack genetic|pgd|typographic, vlm-classify,
evaluate. Every output-producing run writes, under --out: run.json (config
echo, library versions, timings), log.jsonl (per-item records), report.json
(metrics), and attacked PNGs where applicable.

Exit codes: 0 success; 2 configuration/usage error; 3 oracle/endpoint
error; 4 completed with per-item failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import json
import platform
import sys
import threading
import time
from pathlib import Path

import numpy as np

from . import __version__
from .client import RemoteOracleError
from .dataset import (
    FrameSampleSpec,
    assign_components,
    build_actor_components,
    load_catalog,
    sample_frames_balanced,
    verify_no_contamination,
    write_manifest,
)
from .genetic import GaConfig, run_attack
from .images import load_png, save_png, to_norm
from .metrics import attack_success_rate, evaluate, load_scored_samples
from .pgd import PgdConfig, run_pgd
from .runner import (
    Frame,
    item_seed,
    load_frames,
    pipeline_attack_and_eval,
    resolve_oracle,
    write_pipeline_outputs,
)
from .server import OracleServer
from .typographic import DecoyPathTemplate, OverlaySpec, composite_overlay, generate_decoy_path
from .vlm import VlmClassificationError, VlmClient, VlmConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3
EXIT_PARTIAL = 4


class CliError(Exception):
    """Configuration problem surfaced to the user (exit code 2)."""


def parse_fraction(text: str) -> float:
    """Accept plain floats and a/b fractions such as '10/255'."""
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}") from exc


def parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad ratios {text!r}") from exc


def parse_shape(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) == 2:
        parts.append("1")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("shape must look like 64x64 or 64x64x3")
    try:
        h, w, c = (int(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}") from exc
    if h < 1 or w < 1 or c not in (1, 3):
        raise argparse.ArgumentTypeError("shape needs positive H, W and 1 or 3 channels")
    return h, w, c


def _versions() -> dict:
    import PIL
    import requests
    import scipy

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pillow": PIL.__version__,
        "requests": requests.__version__,
        "evadebench": __version__,
    }


def write_run_manifest(
    out_dir: Path,
    subcommand: str,
    argv: list[str],
    config: dict,
    outputs: list[str],
    started: float,
    started_utc: str,
) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "subcommand": subcommand,
        "argv": argv,
        "config": config,
        "versions": _versions(),
        "started_utc": started_utc,
        "duration_s": round(time.monotonic() - started, 6),
        "outputs": sorted(outputs),
    }
    path = out_dir / "run.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return str(path)


class _Run:
    """Tracks timing and written outputs for the run manifest."""

    def __init__(self, args: argparse.Namespace, subcommand: str, config: dict):
        self.args = args
        self.subcommand = subcommand
        self.config = config
        self.outputs: list[str] = []
        self.started = time.monotonic()
        self.started_utc = (
            datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
        )

    def finish(self, out_dir: str | Path) -> None:
        write_run_manifest(
            Path(out_dir),
            self.subcommand,
            list(self.args.argv),
            self.config,
            self.outputs,
            self.started,
            self.started_utc,
        )


# --- split ---


def cmd_split(args: argparse.Namespace) -> int:
    config = {
        "catalog": args.catalog,
        "ratios": list(args.ratios),
        "frames_per_split": args.frames_per_split,
        "seed": args.seed,
    }
    run = _Run(args, "split", config)
    out = Path(args.out)

    videos = load_catalog(args.catalog)
    components = build_actor_components(videos)
    assignment = assign_components(components, videos, ratios=args.ratios, seed=args.seed)
    violations = verify_no_contamination(assignment, videos)
    spec = FrameSampleSpec(frames_per_split=args.frames_per_split, seed=args.seed)
    refs = sample_frames_balanced(assignment, videos, spec)

    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.jsonl"
    write_manifest(manifest_path, refs, videos)
    run.outputs.append(str(manifest_path))

    report = {
        "videos": len(videos),
        "actor_components": len(components),
        "achieved_ratios": assignment.achieved_ratios,
        "contamination_violations": violations,
        "warnings": assignment.warnings,
        "frames_per_split": args.frames_per_split,
        "assignment": dict(sorted(assignment.by_video.items())),
    }
    report_path = out / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    run.outputs.append(str(report_path))
    run.finish(out)

    print(f"split: {len(videos)} videos over {len(components)} actor components")
    for name, ratio in assignment.achieved_ratios.items():
        print(f"  {name}: {ratio:.3f}")
    if violations:
        print(f"  CONTAMINATION: {violations}", file=sys.stderr)
        return EXIT_PARTIAL
    for warning in assignment.warnings:
        print(f"  warning: {warning}", file=sys.stderr)
    print(f"manifest: {manifest_path}")
    return EXIT_OK


# --- serve ---


def cmd_serve(args: argparse.Namespace) -> int:
    oracle = resolve_oracle(args.oracle, shape=args.shape, seed=args.oracle_seed)
    server = OracleServer(oracle, host=args.host, port=args.port)
    server.start()
    print(f"serving {args.oracle} at {server.url}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return EXIT_OK


# --- attack family ---


def _load_attack_frames(args: argparse.Namespace) -> list[Frame]:
    src = Path(args.input)
    if not src.exists():
        raise CliError(f"input {src} does not exist")
    if src.suffix.lower() == ".png":
        return [Frame(id=src.stem, label=1, image=load_png(src), path=str(src))]
    from .dataset import load_manifest

    entries = load_manifest(src)
    return load_frames(entries, src.parent)


def _common_shape(frames: list[Frame]) -> tuple[int, int, int]:
    shapes = {f.image.shape for f in frames}
    if len(shapes) != 1:
        raise CliError(f"frames have mixed shapes {sorted(shapes)}; builtin oracles need one shape")
    return next(iter(shapes))


def _write_heatmaps(out: Path, frames: list[Frame], adversarial: dict) -> list[str]:
    """|adversarial - original| stretched to full range, for eyeballing structure."""
    heat_dir = out / "heatmap"
    written = []
    for frame in frames:
        if frame.id not in adversarial:
            continue
        delta = np.abs(
            to_norm(adversarial[frame.id]) - to_norm(frame.image)
        )
        peak = float(delta.max())
        scaled = np.zeros_like(delta) if peak == 0 else delta / peak
        heat_dir.mkdir(parents=True, exist_ok=True)
        safe = "".join(c if c.isalnum() or c in "-_." else "_" for c in frame.id)
        path = heat_dir / f"{safe}.png"
        save_png(path, (np.floor(scaled * 255.0 + 0.5)).astype(np.uint8))
        written.append(str(path))
    return written


def _run_attack_pipeline(args: argparse.Namespace, kind: str, config: dict,
                         ga_cfg: GaConfig | None = None,
                         pgd_cfg: PgdConfig | None = None,
                         overlay: OverlaySpec | None = None,
                         template: DecoyPathTemplate | None = None) -> int:
    run = _Run(args, f"attack {kind}", config)
    out = Path(args.out)
    frames = _load_attack_frames(args)
    shape = _common_shape(frames)
    oracle = resolve_oracle(args.oracle, shape=shape, seed=args.oracle_seed)

    single = Path(args.input).suffix.lower() == ".png"
    if single:
        # One image: attack unconditionally and report the outcome.
        frame = frames[0]
        seed = item_seed(args.seed, 0)
        if kind == "genetic":
            result = run_attack(oracle, frame.image, dataclasses.replace(ga_cfg, seed=seed))
        elif kind == "pgd":
            result = run_pgd(oracle, frame.image, dataclasses.replace(pgd_cfg, seed=seed))
        else:
            rng = np.random.default_rng(seed)
            text = generate_decoy_path(
                template, rng,
                max_width_px=frame.image.shape[1] - 2 * overlay.margin,
                point_size=overlay.point_size, dpi=overlay.dpi,
            )
            adv = composite_overlay(frame.image, dataclasses.replace(overlay, text=text))
            score = float(oracle.score_batch([adv])[0])
            from .genetic import AttackResult

            result = AttackResult(
                success=score < args.threshold, adversarial=adv,
                queries_used=1, generations_run=0, final_score=score,
            )
        out.mkdir(parents=True, exist_ok=True)
        adv_path = out / "attacked" / f"{frame.id}.png"
        adv_path.parent.mkdir(exist_ok=True)
        save_png(adv_path, result.adversarial)
        run.outputs.append(str(adv_path))
        log_path = out / "log.jsonl"
        record = {
            "index": 0, "id": frame.id, "label": frame.label,
            "attacked": True, "post_score": result.final_score,
            "queries": result.queries_used, "success": result.success,
            "generations": result.generations_run, "seed": seed,
        }
        if result.error is not None:
            record["error"] = result.error
        with open(log_path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        run.outputs.append(str(log_path))
        if kind == "pgd":
            run.outputs.extend(
                _write_heatmaps(out, frames, {frame.id: result.adversarial})
            )
        run.finish(out)
        status = "flipped" if result.success else "not flipped"
        print(f"{kind}: {frame.id} {status} "
              f"(score {result.final_score:.4f}, {result.queries_used} queries)")
        if result.error is not None:
            print(f"oracle error during attack: {result.error}", file=sys.stderr)
            return EXIT_ORACLE
        return EXIT_OK

    result = pipeline_attack_and_eval(
        frames, oracle, kind,
        threshold=args.threshold, global_seed=args.seed,
        ga_cfg=ga_cfg, pgd_cfg=pgd_cfg, overlay=overlay, template=template,
        workers=args.workers,
    )
    run.outputs.extend(write_pipeline_outputs(out, result))
    if kind == "pgd":
        run.outputs.extend(_write_heatmaps(out, frames, result.adversarial))
    run.finish(out)

    print(result.attacked.render())
    asr = "-" if result.asr is None else f"{result.asr:.4f}"
    nq = "-" if result.nq is None else f"{result.nq:.1f}"
    print(f"ASR {asr}  NQ {nq}  failures {result.failures}")
    return EXIT_PARTIAL if result.failures else EXIT_OK


def cmd_attack_genetic(args: argparse.Namespace) -> int:
    eps = parse_fraction(args.eps)
    wmut = parse_fraction(args.wmut) if args.wmut is not None else None
    ga_cfg = GaConfig(
        n=args.pop, m=args.gens, k=args.elites, epsilon=eps,
        p_mut=args.pmut, w_mut=wmut, success_threshold=args.threshold,
    )
    config = {
        "oracle": args.oracle, "eps": args.eps, "eps_value": eps,
        "pop": args.pop, "gens": args.gens, "elites": args.elites,
        "pmut": args.pmut, "wmut": args.wmut,
        "threshold": args.threshold, "seed": args.seed,
        "input": args.input, "workers": args.workers,
    }
    return _run_attack_pipeline(args, "genetic", config, ga_cfg=ga_cfg)


def cmd_attack_pgd(args: argparse.Namespace) -> int:
    eps = parse_fraction(args.eps)
    step = parse_fraction(args.step) if args.step is not None else None
    pgd_cfg = PgdConfig(
        epsilon=eps, step=step, iters=args.iters,
        success_threshold=args.threshold,
    )
    config = {
        "oracle": args.oracle, "eps": args.eps, "eps_value": eps,
        "step": args.step, "iters": args.iters,
        "threshold": args.threshold, "seed": args.seed, "input": args.input,
    }
    if args.oracle.startswith(("http://", "https://")):
        raise CliError("pgd needs gradient access; builtin oracles only")
    return _run_attack_pipeline(args, "pgd", config, pgd_cfg=pgd_cfg)


def cmd_attack_typographic(args: argparse.Namespace) -> int:
    overlay = OverlaySpec(
        text="", opacity=args.opacity, point_size=args.size,
        margin=args.margin, dpi=args.dpi,
    )
    template = (
        DecoyPathTemplate(segments=tuple(args.template.split("/")))
        if args.template else DecoyPathTemplate()
    )
    config = {
        "oracle": args.oracle, "opacity": args.opacity, "size": args.size,
        "margin": args.margin, "dpi": args.dpi, "template": args.template,
        "threshold": args.threshold, "seed": args.seed, "input": args.input,
    }
    if args.oracle is None:
        return _typographic_transform_only(args, config, overlay, template)
    return _run_attack_pipeline(
        args, "typographic", config, overlay=overlay, template=template
    )


def _typographic_transform_only(args, config, overlay, template) -> int:
    """No oracle: overlay decoy captions on every input frame and save them."""
    run = _Run(args, "attack typographic", config)
    out = Path(args.out)
    frames = _load_attack_frames(args)
    out.mkdir(parents=True, exist_ok=True)
    adv_dir = out / "attacked"
    adv_dir.mkdir(exist_ok=True)
    log_path = out / "log.jsonl"
    failures = 0
    with open(log_path, "w", encoding="utf-8") as fh:
        for i, frame in enumerate(frames):
            seed = item_seed(args.seed, i)
            rng = np.random.default_rng(seed)
            record = {"index": i, "id": frame.id, "seed": seed}
            try:
                text = generate_decoy_path(
                    template, rng,
                    max_width_px=frame.image.shape[1] - 2 * overlay.margin,
                    point_size=overlay.point_size, dpi=overlay.dpi,
                )
                adv = composite_overlay(
                    frame.image, dataclasses.replace(overlay, text=text)
                )
                safe = "".join(
                    c if c.isalnum() or c in "-_." else "_" for c in frame.id
                )
                path = adv_dir / f"{safe}.png"
                save_png(path, adv)
                run.outputs.append(str(path))
                record.update({"overlay_text": text, "out_path": str(path)})
            except ValueError as exc:
                failures += 1
                record["error"] = str(exc)
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    run.outputs.append(str(log_path))
    run.finish(out)
    print(f"typographic: {len(frames) - failures}/{len(frames)} frames overlaid")
    return EXIT_PARTIAL if failures else EXIT_OK


# --- vlm-classify ---


def cmd_vlm_classify(args: argparse.Namespace) -> int:
    config = {
        "manifest": args.manifest, "endpoint": args.endpoint,
        "model": args.model, "samples": args.samples,
        "max_retries": args.max_retries, "timeout": args.timeout,
        "temperature": args.temperature,
    }
    run = _Run(args, "vlm-classify", config)
    out = Path(args.out)

    from .dataset import load_manifest

    entries = load_manifest(args.manifest)
    frames = load_frames(entries, Path(args.manifest).parent)
    cfg = VlmConfig(
        endpoint=args.endpoint, model=args.model, samples=args.samples,
        max_retries=args.max_retries, timeout=args.timeout,
        temperature=args.temperature,
        min_request_interval=args.min_request_interval,
    )
    client = VlmClient(cfg)

    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.jsonl"
    failures = 0
    with open(report_path, "w", encoding="utf-8") as fh:
        for frame in frames:
            record = {"id": frame.id, "path": frame.path, "label": frame.label}
            try:
                outcome = client.classify(frame.image)
                record.update(
                    {
                        "score": outcome.score,
                        "verdicts": [
                            {"verdict": v.verdict, "reason": v.reason}
                            for v in outcome.verdicts
                        ],
                        "retries": outcome.retries,
                        "requests": outcome.requests_made,
                    }
                )
            except VlmClassificationError as exc:
                failures += 1
                record.update({"error": str(exc), "transcript": exc.transcript})
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    run.outputs.append(str(report_path))
    run.finish(out)
    print(f"vlm-classify: {len(frames) - failures}/{len(frames)} images scored")
    return EXIT_PARTIAL if failures else EXIT_OK


# --- evaluate ---


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = {
        "pred": args.pred, "post_attack": args.post_attack,
        "threshold": args.threshold,
    }
    samples = load_scored_samples(args.pred)
    report = evaluate(samples, threshold=args.threshold)
    print(report.render())

    payload: dict = {"benign": report.to_dict(), "threshold": args.threshold}
    if args.post_attack:
        post = load_scored_samples(args.post_attack)
        attacked = evaluate(post, threshold=args.threshold)
        try:
            asr = attack_success_rate(samples, post, threshold=args.threshold)
        except ValueError as exc:
            asr = None
            print(f"ASR unavailable: {exc}", file=sys.stderr)
        print("after attack:")
        print(attacked.render())
        if asr is not None:
            print(f"ASR {asr:.4f}")
        payload["attacked"] = attacked.to_dict()
        payload["asr"] = asr

    if args.out:
        run = _Run(args, "evaluate", config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report_path = out / "report.json"
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        run.outputs.append(str(report_path))
        run.finish(out)
    return EXIT_OK


# --- parser wiring ---


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evadebench",
        description="Black-box evasion benchmark for real/fake image detectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_split = sub.add_parser("split", help="contamination-free dataset split")
    p_split.add_argument("--catalog", required=True, help="video catalog JSONL")
    p_split.add_argument("--ratios", type=parse_ratios, default=(0.8, 0.1, 0.1))
    p_split.add_argument("--frames-per-split", type=int, required=True)
    p_split.add_argument("--seed", type=int, default=0)
    p_split.add_argument("--out", required=True)
    p_split.set_defaults(func=cmd_split)

    p_serve = sub.add_parser("serve", help="expose a builtin oracle over HTTP")
    p_serve.add_argument("--oracle", default="builtin:patch")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=0,
                         help="0 picks a free port; the URL is printed")
    p_serve.add_argument("--shape", type=parse_shape, default=(64, 64, 1))
    p_serve.add_argument("--oracle-seed", type=int, default=0)
    p_serve.set_defaults(func=cmd_serve)

    p_attack = sub.add_parser("attack", help="run an evasion attack")
    attack_sub = p_attack.add_subparsers(dest="attack_kind", required=True)

    def add_common(p, oracle_required=True):
        p.add_argument("--in", dest="input", required=True,
                       help="a PNG or a frame-manifest JSONL")
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threshold", type=float, default=0.5)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--oracle-seed", type=int, default=0)
        if oracle_required:
            p.add_argument("--oracle", required=True,
                           help="builtin:patch | builtin:patch-blurred | "
                                "builtin:linear | http(s)://...")

    p_gen = attack_sub.add_parser("genetic", help="query-only genetic attack")
    add_common(p_gen)
    p_gen.add_argument("--eps", default="10/255")
    p_gen.add_argument("--pop", type=int, default=10)
    p_gen.add_argument("--gens", type=int, default=100)
    p_gen.add_argument("--elites", type=int, default=5)
    p_gen.add_argument("--pmut", type=float, default=0.05)
    p_gen.add_argument("--wmut", default=None,
                       help="mutation step bound; default eps/2")
    p_gen.set_defaults(func=cmd_attack_genetic)

    p_pgd = attack_sub.add_parser("pgd", help="white-box sign-gradient attack")
    add_common(p_pgd)
    p_pgd.add_argument("--eps", default="10/255")
    p_pgd.add_argument("--step", default=None, help="step size; default eps/4")
    p_pgd.add_argument("--iters", type=int, default=40)
    p_pgd.set_defaults(func=cmd_attack_pgd)

    p_typo = attack_sub.add_parser("typographic", help="decoy caption overlay")
    add_common(p_typo, oracle_required=False)
    p_typo.add_argument("--oracle", default=None,
                        help="optional; with an oracle the full attack/eval "
                             "pipeline runs, without one images are only written")
    p_typo.add_argument("--opacity", type=float, default=0.07)
    p_typo.add_argument("--size", type=float, default=29.0)
    p_typo.add_argument("--margin", type=int, default=8)
    p_typo.add_argument("--dpi", type=float, default=72.0)
    p_typo.add_argument("--template", default=None,
                        help="path template, e.g. '{root}/{marker}/{slug}/frame_{index}.png'")
    p_typo.set_defaults(func=cmd_attack_typographic)

    p_vlm = sub.add_parser("vlm-classify", help="zero-shot VLM real/fake scoring")
    p_vlm.add_argument("--manifest", required=True)
    p_vlm.add_argument("--endpoint", required=True,
                       help="chat-completions URL; credential via $VLM_API_KEY")
    p_vlm.add_argument("--model", default="default")
    p_vlm.add_argument("--samples", type=int, default=5)
    p_vlm.add_argument("--max-retries", type=int, default=3)
    p_vlm.add_argument("--timeout", type=float, default=60.0)
    p_vlm.add_argument("--temperature", type=float, default=None)
    p_vlm.add_argument("--min-request-interval", type=float, default=0.0)
    p_vlm.add_argument("--out", required=True)
    p_vlm.set_defaults(func=cmd_vlm_classify)

    p_eval = sub.add_parser("evaluate", help="metric report from prediction files")
    p_eval.add_argument("--pred", required=True, help="JSONL of {id, score, label}")
    p_eval.add_argument("--post-attack", default=None,
                        help="JSONL of post-attack scores for the same ids")
    p_eval.add_argument("--threshold", type=float, default=0.5)
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RemoteOracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (ValueError, FileNotFoundError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
