"""Actor-disjoint splitting and class-balanced frame sampling."""

import collections

import numpy as np
import pytest
from scipy import stats

from evadebench import (
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


def real(vid, actor, frames=100):
    return VideoRecord(id=vid, kind="real", actors=frozenset({actor}),
                       frame_count=frames)


def fake(vid, a, b, frames=100):
    return VideoRecord(id=vid, kind="fake", actors=frozenset({a, b}),
                       frame_count=frames)


def random_corpus(rng, n_actors=60, n_real=80, n_fake=40, max_frames=200):
    """Random catalog: singles plus random actor-pair swaps."""
    videos = []
    for i in range(n_real):
        actor = f"a{rng.integers(0, n_actors):03d}"
        videos.append(real(f"r{i:03d}", actor, int(rng.integers(1, max_frames))))
    for i in range(n_fake):
        a, b = rng.choice(n_actors, size=2, replace=False)
        videos.append(fake(f"f{i:03d}", f"a{a:03d}", f"b{b:03d}",
                           int(rng.integers(1, max_frames))))
    return videos


class TestVideoRecord:
    def test_real_needs_one_actor(self):
        with pytest.raises(ValueError):
            VideoRecord(id="x", kind="real", actors=frozenset({"a", "b"}),
                        frame_count=1)

    def test_fake_needs_two_actors(self):
        with pytest.raises(ValueError):
            VideoRecord(id="x", kind="fake", actors=frozenset({"a"}),
                        frame_count=1)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            VideoRecord(id="x", kind="synthetic", actors=frozenset({"a"}),
                        frame_count=1)

    def test_rejects_negative_frames(self):
        with pytest.raises(ValueError):
            real("x", "a", frames=-1)


class TestDisjointSet:
    def test_singletons(self):
        dsu = DisjointSet()
        for x in "abc":
            dsu.add(x)
        assert sorted(map(sorted, dsu.components())) == [["a"], ["b"], ["c"]]

    def test_chained_unions(self):
        dsu = DisjointSet()
        for x in "abcd":
            dsu.add(x)
        dsu.union("a", "b")
        dsu.union("b", "c")
        comps = {frozenset(c) for c in dsu.components()}
        assert comps == {frozenset("abc"), frozenset("d")}

    def test_union_idempotent(self):
        dsu = DisjointSet()
        dsu.add("a")
        dsu.add("b")
        dsu.union("a", "b")
        dsu.union("b", "a")
        assert len(dsu.components()) == 1


class TestBuildActorComponents:
    def test_fake_video_links_its_actors(self):
        videos = [real("r1", "alice"), real("r2", "bob"),
                  fake("f1", "alice", "bob"), real("r3", "carol")]
        comps = {frozenset(c) for c in build_actor_components(videos)}
        assert comps == {frozenset({"alice", "bob"}), frozenset({"carol"})}

    def test_transitive_linking(self):
        # a-b and b-c swaps chain all three actors into one component
        videos = [fake("f1", "a", "b"), fake("f2", "b", "c"), real("r1", "d")]
        comps = {frozenset(c) for c in build_actor_components(videos)}
        assert comps == {frozenset({"a", "b", "c"}), frozenset({"d"})}

    def test_real_only_actors_are_singletons(self):
        videos = [real(f"r{i}", f"actor{i}") for i in range(5)]
        comps = build_actor_components(videos)
        assert len(comps) == 5
        assert all(len(c) == 1 for c in comps)


class TestAssignComponents:
    def test_every_video_gets_a_split(self):
        videos = [real("r1", "a"), real("r2", "b"), fake("f1", "a", "b"),
                  real("r3", "c")]
        comps = build_actor_components(videos)
        assignment = assign_components(comps, videos)
        assert set(assignment.by_video) == {"r1", "r2", "f1", "r3"}
        assert set(assignment.by_video.values()) <= {"train", "validation", "test"}

    def test_videos_follow_their_component(self):
        videos = [real("r1", "a"), real("r2", "b"), fake("f1", "a", "b")]
        comps = build_actor_components(videos)
        assignment = assign_components(comps, videos)
        # all three share the {a, b} component: identical split
        assert len(set(assignment.by_video.values())) == 1

    def test_deterministic_per_seed(self):
        videos = random_corpus(np.random.default_rng(5))
        comps = build_actor_components(videos)
        a = assign_components(comps, videos, seed=3)
        b = assign_components(comps, videos, seed=3)
        assert a.by_video == b.by_video
        assert a.achieved_ratios == b.achieved_ratios

    def test_seed_changes_assignment(self):
        videos = random_corpus(np.random.default_rng(5))
        comps = build_actor_components(videos)
        outs = {tuple(sorted(assign_components(comps, videos, seed=s).by_video.items()))
                for s in range(5)}
        assert len(outs) > 1

    def test_ratios_achieved_with_many_components(self):
        # >= 50 components of modest weight: every ratio within 0.05
        rng = np.random.default_rng(0)
        videos = []
        for i in range(60):
            videos.append(real(f"r{i:03d}", f"solo{i:03d}",
                               frames=int(rng.integers(10, 50))))
        comps = build_actor_components(videos)
        assert len(comps) >= 50
        for seed in range(10):
            assignment = assign_components(comps, videos, seed=seed)
            for name, want in zip(("train", "validation", "test"), (0.8, 0.1, 0.1)):
                assert abs(assignment.achieved_ratios[name] - want) <= 0.05, (
                    seed, assignment.achieved_ratios)

    def test_one_component_takes_everything_and_warns(self):
        # a single connected component cannot be divided: expect a warning
        videos = [fake("f1", "a", "b"), fake("f2", "b", "c"), real("r1", "a")]
        comps = build_actor_components(videos)
        assert len(comps) == 1
        assignment = assign_components(comps, videos)
        assert len(set(assignment.by_video.values())) == 1
        assert assignment.warnings
        assert "exceeds" in assignment.warnings[0]

    def test_two_equal_components_follow_greedy_deficit(self):
        # targets are [160, 20, 20]; train's deficit still dominates after
        # the first 100-frame component lands there, so both go to train
        videos = [real("r1", "a", 100), real("r2", "b", 100)]
        comps = build_actor_components(videos)
        assignment = assign_components(comps, videos)
        assert assignment.by_video == {"r1": "train", "r2": "train"}
        assert assignment.achieved_ratios["train"] == 1.0

    def test_custom_ratios(self):
        videos = [real(f"r{i}", f"a{i}", 10) for i in range(100)]
        comps = build_actor_components(videos)
        assignment = assign_components(comps, videos, ratios=(0.5, 0.25, 0.25))
        assert abs(assignment.achieved_ratios["train"] - 0.5) <= 0.05

    @pytest.mark.parametrize("ratios", [
        (0.5, 0.5), (0.5, 0.3, 0.3), (-0.1, 0.6, 0.5), (0.8, 0.1, 0.2),
    ])
    def test_rejects_bad_ratios(self, ratios):
        videos = [real("r1", "a")]
        comps = build_actor_components(videos)
        with pytest.raises(ValueError):
            assign_components(comps, videos, ratios=ratios)

    def test_rejects_foreign_components(self):
        videos = [fake("f1", "a", "b")]
        # components that separate a and b cannot host the fake video
        with pytest.raises(ValueError, match="spans"):
            assign_components([frozenset({"a"}), frozenset({"b"})], videos)


class TestVerifyNoContamination:
    def test_clean_assignment(self):
        videos = [real("r1", "a"), real("r2", "b")]
        assignment = SplitAssignment(
            by_video={"r1": "train", "r2": "test"}, achieved_ratios={})
        assert verify_no_contamination(assignment, videos) == []

    def test_detects_actor_straddling_splits(self):
        # one actor with videos in two splits, directly and via a swap
        videos = [real("r1", "a"), fake("f1", "a", "b")]
        assignment = SplitAssignment(
            by_video={"r1": "train", "f1": "test"}, achieved_ratios={})
        assert verify_no_contamination(assignment, videos) == ["a"]

    def test_reports_all_violators_sorted(self):
        videos = [real("r1", "z"), fake("f1", "z", "a"),
                  real("r2", "a"), real("r3", "m")]
        assignment = SplitAssignment(
            by_video={"r1": "train", "f1": "validation", "r2": "test",
                      "r3": "train"},
            achieved_ratios={})
        assert verify_no_contamination(assignment, videos) == ["a", "z"]

    def test_property_real_assignments_are_clean(self):
        # the component-level assignment can never contaminate, by construction
        for seed in range(25):
            videos = random_corpus(np.random.default_rng(seed))
            comps = build_actor_components(videos)
            assignment = assign_components(comps, videos, seed=seed)
            assert verify_no_contamination(assignment, videos) == []


class TestFrameSampling:
    def _standard(self, seed=0):
        rng = np.random.default_rng(9)
        videos = []
        for i in range(30):
            videos.append(real(f"r{i:02d}", f"s{i:02d}",
                               frames=int(rng.integers(50, 150))))
        for i in range(30):
            videos.append(fake(f"f{i:02d}", f"x{i:02d}", f"y{i:02d}",
                               frames=int(rng.integers(50, 150))))
        comps = build_actor_components(videos)
        assignment = assign_components(comps, videos, ratios=(0.4, 0.3, 0.3),
                                       seed=seed)
        return videos, assignment

    def test_balanced_counts(self):
        videos, assignment = self._standard()
        spec = FrameSampleSpec(frames_per_split=20, seed=1)
        refs = sample_frames_balanced(assignment, videos, spec)
        per_split = collections.Counter((r.split, r.label) for r in refs)
        for split in ("train", "validation", "test"):
            assert per_split[(split, "real")] == 10
            assert per_split[(split, "fake")] == 10

    def test_no_duplicate_frames(self):
        videos, assignment = self._standard()
        refs = sample_frames_balanced(assignment, videos,
                                      FrameSampleSpec(frames_per_split=40, seed=2))
        keys = [(r.video_id, r.frame_index) for r in refs]
        assert len(keys) == len(set(keys))

    def test_frame_indices_in_range(self):
        videos, assignment = self._standard()
        by_id = {v.id: v for v in videos}
        refs = sample_frames_balanced(assignment, videos,
                                      FrameSampleSpec(frames_per_split=30, seed=3))
        for ref in refs:
            assert 0 <= ref.frame_index < by_id[ref.video_id].frame_count

    def test_frames_come_from_their_split(self):
        videos, assignment = self._standard()
        refs = sample_frames_balanced(assignment, videos,
                                      FrameSampleSpec(frames_per_split=20, seed=4))
        for ref in refs:
            assert assignment.by_video[ref.video_id] == ref.split

    def test_deterministic_per_seed(self):
        videos, assignment = self._standard()
        spec = FrameSampleSpec(frames_per_split=20, seed=5)
        a = sample_frames_balanced(assignment, videos, spec)
        b = sample_frames_balanced(assignment, videos, spec)
        assert a == b

    def test_seed_changes_sample(self):
        videos, assignment = self._standard()
        a = sample_frames_balanced(assignment, videos,
                                   FrameSampleSpec(frames_per_split=20, seed=6))
        b = sample_frames_balanced(assignment, videos,
                                   FrameSampleSpec(frames_per_split=20, seed=7))
        assert a != b

    def test_insufficient_frames_raises(self):
        videos = [real("r1", "a", 5), fake("f1", "b", "c", 5)]
        comps = build_actor_components(videos)
        assignment = assign_components(comps, videos, ratios=(1.0, 0.0, 0.0))
        with pytest.raises(ValueError, match="needs"):
            sample_frames_balanced(assignment, videos,
                                   FrameSampleSpec(frames_per_split=20))

    def test_balanced_requires_even_quota(self):
        with pytest.raises(ValueError, match="even"):
            FrameSampleSpec(frames_per_split=15)

    def test_unbalanced_mode_allows_odd(self):
        spec = FrameSampleSpec(frames_per_split=15, balanced=False)
        videos, assignment = self._standard()
        refs = sample_frames_balanced(assignment, videos, spec)
        per_split = collections.Counter(r.split for r in refs)
        assert all(per_split[s] == 15 for s in ("train", "validation", "test"))

    def test_pooled_sampling_is_uniform_over_frames(self):
        # two videos of one class, 25/75 frames: selection frequency of the
        # smaller video must track its share of the pool, not 50/50 per video
        videos = [real("small", "a", 25), real("big", "b", 75),
                  fake("f1", "c", "d", 100),
                  real("vr", "e", 50), fake("vf", "f", "g", 50),
                  real("tr", "h", 50), fake("tf", "i", "j", 50)]
        assignment = SplitAssignment(
            by_video={"small": "train", "big": "train", "f1": "train",
                      "vr": "validation", "vf": "validation",
                      "tr": "test", "tf": "test"},
            achieved_ratios={})
        counts = collections.Counter()
        draws = 300
        for seed in range(draws):
            refs = sample_frames_balanced(
                assignment, videos,
                FrameSampleSpec(frames_per_split=2, seed=seed))
            real_refs = [r for r in refs
                         if r.split == "train" and r.label == "real"]
            assert len(real_refs) == 1
            counts[real_refs[0].video_id] += 1
        observed = [counts["small"], counts["big"]]
        _, p = stats.chisquare(observed, f_exp=[draws * 0.25, draws * 0.75])
        assert p > 0.001, observed


class TestCatalogSerialization:
    def test_catalog_round_trip(self, tmp_path):
        path = tmp_path / "catalog.jsonl"
        path.write_text(
            '{"id": "r1", "kind": "real", "actors": ["a"], "frame_count": 10}\n'
            '{"id": "f1", "kind": "fake", "actors": ["a", "b"], '
            '"frame_count": 20, "path": "vids/f1"}\n'
        )
        records = load_catalog(path)
        assert records[0] == real("r1", "a", 10)
        assert records[1].path == "vids/f1"

    def test_catalog_rejects_duplicates(self, tmp_path):
        path = tmp_path / "catalog.jsonl"
        path.write_text(
            '{"id": "r1", "kind": "real", "actors": ["a"], "frame_count": 10}\n'
            '{"id": "r1", "kind": "real", "actors": ["b"], "frame_count": 10}\n'
        )
        with pytest.raises(ValueError, match="duplicate"):
            load_catalog(path)

    def test_catalog_rejects_bad_records(self, tmp_path):
        path = tmp_path / "catalog.jsonl"
        path.write_text('{"id": "r1", "kind": "real"}\n')
        with pytest.raises(ValueError, match="bad catalog record"):
            load_catalog(path)

    def test_catalog_rejects_empty(self, tmp_path):
        path = tmp_path / "catalog.jsonl"
        path.write_text("\n\n")
        with pytest.raises(ValueError, match="empty"):
            load_catalog(path)

    def test_manifest_round_trip(self, tmp_path):
        videos = [real("r1", "a", 10)]
        videos[0] = VideoRecord(id="r1", kind="real", actors=frozenset({"a"}),
                                frame_count=10, path="vids/r1")
        refs = [FrameRef("r1", 3, "real", "train")]
        path = tmp_path / "manifest.jsonl"
        write_manifest(path, refs, videos)
        entries = load_manifest(path)
        assert entries == [{
            "frame_path": "vids/r1/frame_00003.png",
            "frame_index": 3,
            "label": "real",
            "split": "train",
            "video_id": "r1",
        }]

    def test_manifest_rejects_missing_keys(self, tmp_path):
        path = tmp_path / "manifest.jsonl"
        path.write_text('{"frame_path": "x.png"}\n')
        with pytest.raises(ValueError, match="missing keys"):
            load_manifest(path)
