"""Detector evaluation metrics: threshold metrics, AP, ROC AUC, ASR, queries.

Labels are 1 = fake (positive class), 0 = real. The threshold rule is
"predict fake iff score >= threshold". Tie handling is fixed: AUC scores
tied pairs 0.5; average precision ranks by (-score, id) so ties resolve
stably by sample id.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

LABEL_FAKE = 1
LABEL_REAL = 0


@dataclass(frozen=True)
class ScoredSample:
    id: str
    score: float
    label: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"sample {self.id!r}: score {self.score} outside [0, 1]")
        if self.label not in (LABEL_REAL, LABEL_FAKE):
            raise ValueError(f"sample {self.id!r}: label must be 0 (real) or 1 (fake)")


@dataclass
class EvaluationReport:
    acc: float
    precision: float | None
    recall: float
    map: float
    roc_auc: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    asr: float | None = None
    nq: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "acc": self.acc,
            "precision": self.precision,
            "recall": self.recall,
            "map": self.map,
            "roc_auc": self.roc_auc,
            "asr": self.asr,
            "nq": self.nq,
            "threshold": self.threshold,
            "counts": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "notes": list(self.notes),
        }

    def render(self) -> str:
        """One-row table in the report column order."""
        headers = ["ACC", "Precision", "Recall", "mAP", "ROC AUC", "ASR", "NQ"]
        values = [self.acc, self.precision, self.recall, self.map, self.roc_auc,
                  self.asr, self.nq]
        cells = ["-" if v is None else f"{v:.4f}".rstrip("0").rstrip(".")
                 for v in values]
        widths = [max(len(h), len(c)) for h, c in zip(headers, cells)]
        head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
        row = "  ".join(c.ljust(w) for c, w in zip(cells, widths))
        return f"{head}\n{row}"


def _split_scores(samples: list[ScoredSample]) -> tuple[np.ndarray, np.ndarray]:
    scores = np.array([s.score for s in samples], dtype=np.float64)
    labels = np.array([s.label for s in samples], dtype=np.int64)
    return scores, labels


def roc_auc(samples: list[ScoredSample]) -> float:
    """Probability a random fake outranks a random real; tied pairs count 0.5.

    Computed with the rank-sum identity rather than all-pairs enumeration.
    """
    scores, labels = _split_scores(samples)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC AUC needs at least one fake and one real sample")
    ranks = rankdata(scores, method="average")
    rank_sum = float(ranks[labels == LABEL_FAKE].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def average_precision(samples: list[ScoredSample]) -> float:
    """Mean of precision at each positive's rank, sorted by (-score, id)."""
    if not any(s.label == LABEL_FAKE for s in samples):
        raise ValueError("average precision needs at least one fake sample")
    ordered = sorted(samples, key=lambda s: (-s.score, s.id))
    hits = 0
    total = 0.0
    for rank, sample in enumerate(ordered, start=1):
        if sample.label == LABEL_FAKE:
            hits += 1
            total += hits / rank
    return total / hits


def evaluate(samples: list[ScoredSample], threshold: float = 0.5) -> EvaluationReport:
    """Full benign-evaluation report at one decision threshold."""
    if not samples:
        raise ValueError("cannot evaluate an empty sample set")
    scores, labels = _split_scores(samples)
    predicted_fake = scores >= threshold
    actual_fake = labels == LABEL_FAKE
    tp = int(np.sum(predicted_fake & actual_fake))
    fp = int(np.sum(predicted_fake & ~actual_fake))
    tn = int(np.sum(~predicted_fake & ~actual_fake))
    fn = int(np.sum(~predicted_fake & actual_fake))

    notes: list[str] = []
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    if precision is None:
        notes.append("precision undefined: nothing predicted fake")
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    if tp + fn == 0:
        notes.append("recall reported as 0: no fake samples")

    try:
        auc = roc_auc(samples)
    except ValueError as exc:
        auc = float("nan")
        notes.append(f"roc_auc undefined: {exc}")
    try:
        ap = average_precision(samples)
    except ValueError as exc:
        ap = float("nan")
        notes.append(f"map undefined: {exc}")

    return EvaluationReport(
        acc=(tp + tn) / len(samples),
        precision=precision,
        recall=recall,
        map=ap,
        roc_auc=auc,
        threshold=threshold,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        notes=notes,
    )


def attack_success_rate(
    pre: list[ScoredSample],
    post: list[ScoredSample],
    threshold: float = 0.5,
) -> float:
    """Fraction of pre-attack true positives pushed below the threshold.

    Only fake-labeled samples detected before the attack count; samples are
    matched by id and both lists must cover the same ids.
    """
    post_by_id = {s.id: s for s in post}
    if set(post_by_id) != {s.id for s in pre}:
        raise ValueError("pre/post sample ids do not match")
    flipped = 0
    true_positives = 0
    for sample in pre:
        if sample.label != LABEL_FAKE or sample.score < threshold:
            continue
        true_positives += 1
        if post_by_id[sample.id].score < threshold:
            flipped += 1
    if true_positives == 0:
        raise ValueError("no pre-attack true positives; ASR undefined")
    return flipped / true_positives


def mean_queries(query_counts: list[int | float]) -> float:
    if not query_counts:
        raise ValueError("mean_queries needs at least one attack result")
    return float(np.mean(np.asarray(query_counts, dtype=np.float64)))


# --- prediction file I/O (line-delimited JSON: {"id", "score", "label"}) ---


def load_scored_samples(path: str | Path) -> list[ScoredSample]:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                samples.append(
                    ScoredSample(
                        id=str(obj["id"]),
                        score=float(obj["score"]),
                        label=int(obj["label"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad prediction record: {exc}") from exc
    if not samples:
        raise ValueError(f"{path}: no prediction records")
    return samples


def write_scored_samples(path: str | Path, samples: list[ScoredSample]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            fh.write(
                json.dumps({"id": s.id, "score": s.score, "label": s.label},
                           sort_keys=True) + "\n"
            )
