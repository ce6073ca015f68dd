"""Black-box evasion benchmark harness for binary real/fake image detectors.

The package provides score oracles (local reference detectors plus an HTTP
wire protocol with server and client), a query-only genetic evasion attack,
a white-box PGD baseline, a decoy-caption overlay attack, zero-shot scoring
through a vision-language endpoint, contamination-free dataset splitting,
and the evaluation metric suite (accuracy/precision/recall/AP/ROC AUC/attack
success rate/query counts).
"""

__version__ = "0.1.0"

from .client import OracleProtocolError, RemoteOracle, RemoteOracleError, remote_score
from .dataset import (
    DisjointSet,
    FrameRef,
    FrameSampleSpec,
    SplitAssignment,
    VideoRecord,
    assign_components,
    build_actor_components,
    load_catalog,
    load_manifest,
    sample_frames_balanced,
    verify_no_contamination,
    write_manifest,
)
from .genetic import (
    AttackResult,
    GaConfig,
    crossover,
    fitness_from_scores,
    init_population,
    mutate,
    run_attack,
    select_elites,
)
from .images import (
    DEFAULT_EPSILON,
    decode_png_b64,
    decode_png_bytes,
    encode_png_b64,
    encode_png_bytes,
    ensure_image,
    ensure_norm,
    from_norm,
    linf_distance,
    load_png,
    quantize_batch,
    save_png,
    to_norm,
)
from .metrics import (
    EvaluationReport,
    ScoredSample,
    attack_success_rate,
    average_precision,
    evaluate,
    load_scored_samples,
    mean_queries,
    roc_auc,
    write_scored_samples,
)
from .oracles import (
    BlurredInputDetector,
    GlobalLinearDetector,
    NormScoreOracle,
    PatchPoolDetector,
    QueryCounter,
    ScoreOracle,
    box_blur,
)
from .pgd import PgdConfig, finite_diff_gradient, run_pgd
from .runner import (
    Frame,
    PipelineResult,
    item_seed,
    load_frames,
    pipeline_attack_and_eval,
    resolve_oracle,
    write_pipeline_outputs,
)
from .server import OracleServer, serve
from .typographic import (
    DecoyPathTemplate,
    OverlaySpec,
    composite_overlay,
    generate_decoy_path,
    render_text_mask,
)
from .vlm import (
    PROMPT,
    VERDICT_SCHEMA,
    VlmClassification,
    VlmClassificationError,
    VlmClient,
    VlmConfig,
    VlmRefusal,
    VlmVerdict,
    classify_zero_shot,
    parse_structured_output,
)

__all__ = [
    "DEFAULT_EPSILON",
    "AttackResult",
    "BlurredInputDetector",
    "DecoyPathTemplate",
    "DisjointSet",
    "EvaluationReport",
    "Frame",
    "FrameRef",
    "FrameSampleSpec",
    "GaConfig",
    "GlobalLinearDetector",
    "NormScoreOracle",
    "OracleProtocolError",
    "OracleServer",
    "OverlaySpec",
    "PatchPoolDetector",
    "PgdConfig",
    "PipelineResult",
    "PROMPT",
    "VERDICT_SCHEMA",
    "QueryCounter",
    "RemoteOracle",
    "RemoteOracleError",
    "ScoreOracle",
    "ScoredSample",
    "SplitAssignment",
    "VideoRecord",
    "VlmClassification",
    "VlmClassificationError",
    "VlmClient",
    "VlmConfig",
    "VlmRefusal",
    "VlmVerdict",
    "assign_components",
    "attack_success_rate",
    "average_precision",
    "box_blur",
    "build_actor_components",
    "classify_zero_shot",
    "composite_overlay",
    "crossover",
    "decode_png_b64",
    "decode_png_bytes",
    "encode_png_b64",
    "encode_png_bytes",
    "ensure_image",
    "ensure_norm",
    "evaluate",
    "finite_diff_gradient",
    "fitness_from_scores",
    "from_norm",
    "generate_decoy_path",
    "init_population",
    "item_seed",
    "linf_distance",
    "load_catalog",
    "load_frames",
    "load_manifest",
    "load_png",
    "load_scored_samples",
    "mean_queries",
    "mutate",
    "parse_structured_output",
    "pipeline_attack_and_eval",
    "quantize_batch",
    "remote_score",
    "render_text_mask",
    "resolve_oracle",
    "roc_auc",
    "run_attack",
    "run_pgd",
    "sample_frames_balanced",
    "save_png",
    "select_elites",
    "serve",
    "to_norm",
    "verify_no_contamination",
    "write_manifest",
    "write_pipeline_outputs",
    "write_scored_samples",
]
