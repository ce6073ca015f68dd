"""Contamination-free dataset splitting for real/fake video corpora.

A fake video is produced from a source and a target actor, so treating
videos independently leaks actors across splits. Instead, actors are
grouped into connected components (fake videos are edges), whole
components are assigned to train/validation/test, and frames are then
sampled class-balanced within each split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPLIT_NAMES = ("train", "validation", "test")


@dataclass(frozen=True)
class VideoRecord:
    id: str
    kind: str  # "real" | "fake"
    actors: frozenset[str]
    frame_count: int
    path: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("real", "fake"):
            raise ValueError(f"video {self.id!r}: kind must be real|fake, got {self.kind!r}")
        object.__setattr__(self, "actors", frozenset(self.actors))
        expected = 1 if self.kind == "real" else 2
        if len(self.actors) != expected:
            raise ValueError(
                f"video {self.id!r}: {self.kind} videos need exactly {expected} "
                f"actor(s), got {sorted(self.actors)}"
            )
        if self.frame_count < 0:
            raise ValueError(f"video {self.id!r}: negative frame_count")


@dataclass
class SplitAssignment:
    by_video: dict[str, str]  # video id -> split name
    achieved_ratios: dict[str, float]
    warnings: list[str] = field(default_factory=list)


class DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self) -> None:
        self._parent: dict[str, str] = {}
        self._size: dict[str, int] = {}

    def add(self, x: str) -> None:
        if x not in self._parent:
            self._parent[x] = x
            self._size[x] = 1

    def find(self, x: str) -> str:
        root = x
        while self._parent[root] != root:
            root = self._parent[root]
        while self._parent[x] != root:
            self._parent[x], x = root, self._parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self._size[ra] < self._size[rb]:
            ra, rb = rb, ra
        self._parent[rb] = ra
        self._size[ra] += self._size[rb]

    def components(self) -> list[frozenset[str]]:
        groups: dict[str, set[str]] = {}
        for x in self._parent:
            groups.setdefault(self.find(x), set()).add(x)
        return [frozenset(g) for g in groups.values()]


def build_actor_components(videos: list[VideoRecord]) -> list[frozenset[str]]:
    """Partition actors into groups linked by shared fake videos.

    Every actor is a node; each fake video joins its source/target pair.
    Actors appearing only in real videos form singleton components.
    """
    dsu = DisjointSet()
    for video in videos:
        actors = sorted(video.actors)
        for actor in actors:
            dsu.add(actor)
        if video.kind == "fake":
            dsu.union(actors[0], actors[1])
    return dsu.components()


def _component_of(videos: list[VideoRecord], components: list[frozenset[str]]) -> dict[str, int]:
    """Map each video id to the index of the component holding its actors."""
    actor_to_comp: dict[str, int] = {}
    for idx, comp in enumerate(components):
        for actor in comp:
            actor_to_comp[actor] = idx
    mapping: dict[str, int] = {}
    for video in videos:
        comps = {actor_to_comp[a] for a in video.actors}
        if len(comps) != 1:
            raise ValueError(
                f"video {video.id!r} spans {len(comps)} components; "
                "components were not built from these records"
            )
        mapping[video.id] = comps.pop()
    return mapping


def assign_components(
    components: list[frozenset[str]],
    videos: list[VideoRecord],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    seed: int = 0,
) -> SplitAssignment:
    """Assign whole actor components to train/validation/test.

    Components are shuffled with the seed, then each is placed greedily in
    the split with the largest remaining deficit, weighted by frame count.
    Every video follows its actors' component, so no actor straddles splits.
    """
    if len(ratios) != len(SPLIT_NAMES):
        raise ValueError(f"need {len(SPLIT_NAMES)} ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios) or not np.isclose(sum(ratios), 1.0):
        raise ValueError(f"ratios must be non-negative and sum to 1, got {ratios}")

    video_comp = _component_of(videos, components)
    comp_weight = np.zeros(len(components), dtype=np.float64)
    for video in videos:
        comp_weight[video_comp[video.id]] += video.frame_count

    order = np.random.default_rng(seed).permutation(len(components))

    total = float(comp_weight.sum())
    targets = np.array(ratios, dtype=np.float64) * total
    filled = np.zeros(len(SPLIT_NAMES), dtype=np.float64)
    comp_split: dict[int, int] = {}
    warnings: list[str] = []
    capacity = float(targets.max())
    for comp_idx in order:
        comp_idx = int(comp_idx)
        deficit = targets - filled
        split_idx = int(np.argmax(deficit))
        comp_split[comp_idx] = split_idx
        filled[split_idx] += comp_weight[comp_idx]
        overflow = comp_weight[comp_idx] - capacity
        if overflow > 0:
            warnings.append(
                f"component of {len(components[comp_idx])} actor(s) "
                f"({comp_weight[comp_idx]:.0f} frames) exceeds the largest "
                f"split target by {overflow:.0f} frames; ratios will be off"
            )

    by_video = {v.id: SPLIT_NAMES[comp_split[video_comp[v.id]]] for v in videos}
    achieved = {
        name: float(filled[i] / total) if total > 0 else 0.0
        for i, name in enumerate(SPLIT_NAMES)
    }
    return SplitAssignment(by_video=by_video, achieved_ratios=achieved, warnings=warnings)


def verify_no_contamination(
    assignment: SplitAssignment, videos: list[VideoRecord]
) -> list[str]:
    """List actors whose videos landed in more than one split (empty = clean)."""
    actor_splits: dict[str, set[str]] = {}
    for video in videos:
        split = assignment.by_video[video.id]
        for actor in video.actors:
            actor_splits.setdefault(actor, set()).add(split)
    return sorted(a for a, splits in actor_splits.items() if len(splits) > 1)


@dataclass(frozen=True)
class FrameSampleSpec:
    frames_per_split: int
    balanced: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.frames_per_split < 0:
            raise ValueError("frames_per_split must be >= 0")
        if self.balanced and self.frames_per_split % 2 != 0:
            raise ValueError(
                f"balanced sampling needs an even frames_per_split, "
                f"got {self.frames_per_split}"
            )


@dataclass(frozen=True)
class FrameRef:
    video_id: str
    frame_index: int
    label: str  # "real" | "fake"
    split: str

    def frame_path(self, video_path: str) -> str:
        stem = video_path if video_path else self.video_id
        return f"{stem}/frame_{self.frame_index:05d}.png"


def _sample_class(
    videos: list[VideoRecord],
    count: int,
    split: str,
    label: str,
    rng: np.random.Generator,
) -> list[FrameRef]:
    """Uniform sample without replacement from a class's pooled frames."""
    pool = [v for v in videos if v.kind == label]
    available = sum(v.frame_count for v in pool)
    if available < count:
        raise ValueError(
            f"split '{split}' needs {count} {label} frames but only "
            f"{available} exist"
        )
    # Index the pooled frames as one flat range so every frame is equally
    # likely regardless of which video holds it.
    bounds = np.cumsum([v.frame_count for v in pool])
    flat = rng.choice(available, size=count, replace=False)
    refs = []
    for flat_idx in sorted(int(i) for i in flat):
        video_pos = int(np.searchsorted(bounds, flat_idx, side="right"))
        start = 0 if video_pos == 0 else int(bounds[video_pos - 1])
        refs.append(
            FrameRef(
                video_id=pool[video_pos].id,
                frame_index=flat_idx - start,
                label=label,
                split=split,
            )
        )
    return refs


def sample_frames_balanced(
    assignment: SplitAssignment,
    videos: list[VideoRecord],
    spec: FrameSampleSpec,
) -> list[FrameRef]:
    """Draw a class-balanced, seeded frame sample for each split.

    Each split contributes frames_per_split frames, half labeled real and
    half fake (with balanced=False, the split is sampled from both classes
    pooled together). Raises if a class cannot cover its quota.
    """
    by_id = {v.id: v for v in videos}
    manifest: list[FrameRef] = []
    for split_pos, split in enumerate(SPLIT_NAMES):
        members = [by_id[vid] for vid, s in assignment.by_video.items() if s == split]
        members.sort(key=lambda v: v.id)
        rng = np.random.default_rng(
            np.random.SeedSequence(spec.seed, spawn_key=(split_pos,))
        )
        if spec.balanced:
            half = spec.frames_per_split // 2
            manifest.extend(_sample_class(members, half, split, "real", rng))
            manifest.extend(_sample_class(members, half, split, "fake", rng))
        else:
            refs: list[FrameRef] = []
            pool_real = [v for v in members if v.kind == "real"]
            pool_fake = [v for v in members if v.kind == "fake"]
            total = sum(v.frame_count for v in members)
            if total < spec.frames_per_split:
                raise ValueError(
                    f"split '{split}' needs {spec.frames_per_split} frames "
                    f"but only {total} exist"
                )
            n_real = round(
                spec.frames_per_split * sum(v.frame_count for v in pool_real) / total
            ) if total else 0
            n_real = min(n_real, sum(v.frame_count for v in pool_real))
            n_fake = spec.frames_per_split - n_real
            refs.extend(_sample_class(members, n_real, split, "real", rng))
            refs.extend(_sample_class(members, n_fake, split, "fake", rng))
            manifest.extend(refs)
    return manifest


# --- catalog / manifest serialization (line-delimited JSON) ---


def load_catalog(path: str | Path) -> list[VideoRecord]:
    """Read a video catalog: one JSON object per line.

    Required keys: id, kind, actors (list), frame_count; optional: path.
    """
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(
                    VideoRecord(
                        id=str(obj["id"]),
                        kind=str(obj["kind"]),
                        actors=frozenset(str(a) for a in obj["actors"]),
                        frame_count=int(obj["frame_count"]),
                        path=str(obj.get("path", "")),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad catalog record: {exc}") from exc
    if not records:
        raise ValueError(f"{path}: catalog is empty")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate video ids")
    return records


def write_manifest(
    path: str | Path,
    refs: list[FrameRef],
    videos: list[VideoRecord],
) -> None:
    """Write one JSON object per sampled frame: frame_path, label, video_id, split."""
    by_id = {v.id: v for v in videos}
    with open(path, "w", encoding="utf-8") as fh:
        for ref in refs:
            record = {
                "frame_path": ref.frame_path(by_id[ref.video_id].path),
                "label": ref.label,
                "video_id": ref.video_id,
                "frame_index": ref.frame_index,
                "split": ref.split,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_manifest(path: str | Path) -> list[dict]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad manifest line: {exc}") from exc
            if not {"frame_path", "label", "video_id", "split"} <= set(obj):
                raise ValueError(f"{path}:{lineno}: manifest record missing keys")
            entries.append(obj)
    return entries
