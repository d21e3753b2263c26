import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from segharmony.data import (
    DisturbanceConfig, GeneratorConfig, TimeInterval, assign_levels, disturb_boundaries,
    disturb_dataset, disturb_symmetric, distance_to_boundary, find_class_runs, generate_mvd,
    literal_level_bounds, majority, make_splits, read_intervals, read_segments,
    sample_intervals_per_level, segment_interval, segment_labels, segment_pool, write_intervals,
    write_segments,
)
from segharmony.errors import ConfigError, SegmentationError

labels_st = st.lists(st.integers(0, 2), min_size=1, max_size=60)


def chunk_oracle(K, N_l):
    """Brute force: walk the 2N_l chunk edges with exact fractions."""
    levels = {}
    for p in range(1, K + 1):
        for j in range(1, 2 * N_l + 1):
            if Fraction((j - 1) * K, 2 * N_l) < p <= Fraction(j * K, 2 * N_l):
                levels[p] = N_l - j + 1 if j <= N_l else j - N_l
                break
    return [levels[p] for p in range(1, K + 1)]


def runs_of(y):
    return [(r.start, r.end, r.cls) for r in find_class_runs(y)]


# -- generator --------------------------------------------------------------------
def test_generator_is_deterministic():
    cfg = GeneratorConfig(n_intervals=6)
    a, b = generate_mvd(cfg, 5), generate_mvd(cfg, 5)
    for x, y in zip(a, b):
        assert x.values.tobytes() == y.values.tobytes()
        assert x.labels.tobytes() == y.labels.tobytes()
    assert generate_mvd(cfg, 6)[0].values.tobytes() != a[0].values.tobytes()


def test_generated_runs_alternate_within_duration_range():
    cfg = GeneratorConfig(n_intervals=1000, runs_per_interval=3, duration_range=(50, 100), crossfade=0)
    for iv in generate_mvd(cfg, 0):
        runs = find_class_runs(iv.clean_labels)
        assert all(50 <= r.length <= 100 for r in runs)
        assert all(a.cls != b.cls for a, b in zip(runs, runs[1:]))
        assert np.array_equal(iv.labels, iv.clean_labels)


def test_pure_generator_matches_class_templates():
    cfg = GeneratorConfig(n_intervals=3, crossfade=0, noise=0.0, n_features=1, duration_range=(400, 400))
    for iv in generate_mvd(cfg, 1):
        for run in find_class_runs(iv.labels):
            x = iv.values[run.start - 1:run.end, 0]
            spectrum = np.abs(np.fft.rfft(x - x.mean()))
            freq = np.fft.rfftfreq(len(x))[np.argmax(spectrum)]
            assert freq == pytest.approx(cfg.frequency(run.cls), abs=1.5 / len(x))


@pytest.mark.parametrize("field,value", [("n_classes", 1), ("duration_range", (0, 5)),
                                         ("duration_range", (10, 5)), ("crossfade", -1)])
def test_generator_config_errors(field, value):
    cfg = GeneratorConfig(**{field: value})
    with pytest.raises(ConfigError) as exc:
        cfg.validate()
    assert exc.value.key in (field, "duration_range")


def test_time_interval_validation():
    with pytest.raises(ValueError):
        TimeInterval(0, 0, np.zeros((3, 1)), [0, 1], [0, 1])
    with pytest.raises(ValueError):
        TimeInterval(0, 0, np.array([[np.nan], [0.0]]), [0, 1], [0, 1])


# -- segmentation -------------------------------------------------------------------
def test_segment_windows_enumeration():
    X = np.arange(1, 11, dtype=float)[:, None]
    seq = segment_interval(X, np.zeros(10, dtype=int), 4, 2)
    assert seq.n_segments == 4
    assert [list(seg[:, 0].astype(int)) for seg in seq.segments] == [
        [1, 2, 3, 4], [3, 4, 5, 6], [5, 6, 7, 8], [7, 8, 9, 10]]


def test_constant_labels_and_tie_rule():
    assert set(segment_labels(np.full(20, 2), 5, 3)) == {2}
    assert majority([0, 0, 1, 1]) == 0
    assert majority([1, 1, 0, 0]) == 1
    assert majority([1, 0, 0, 1, 1]) == 1


def test_segmentation_errors():
    with pytest.raises(SegmentationError):
        segment_interval(np.zeros((5, 1)), np.zeros(5, dtype=int), 6, 1)
    with pytest.raises(SegmentationError):
        segment_interval(np.zeros((5, 1)), np.zeros(5, dtype=int), 2, 0)


@given(st.integers(1, 80), st.integers(1, 20), st.integers(1, 10), st.integers(0, 10_000))
def test_segments_cover_points_exactly(T, w, r, seed):
    assume(w <= T)
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(T, 2))
    Y = rng.integers(0, 3, T)
    seq = segment_interval(X, Y, w, r)
    L = (T - w) // r + 1
    assert seq.n_segments == L
    covered = set()
    for i in range(L):
        covered.update(range(i * r + 1, i * r + w + 1))
        assert np.array_equal(seq.segments[i], X[i * r:i * r + w])
        window = list(Y[i * r:i * r + w])
        counts = [window.count(c) for c in range(3)]
        assert counts[seq.seg_labels[i]] == max(counts)
    if r <= w:  # with r > w the windows leave gaps by construction
        assert covered == set(range(1, (L - 1) * r + w + 1))
    again = segment_interval(X, Y, w, r)
    assert again.segments.tobytes() == seq.segments.tobytes()


# -- runs --------------------------------------------------------------------------
def test_find_class_runs_examples():
    assert runs_of([0, 0, 1]) == [(1, 2, 0), (3, 3, 1)]
    assert runs_of([4] * 7) == [(1, 7, 4)]
    assert runs_of([0, 1, 0, 1]) == [(1, 1, 0), (2, 2, 1), (3, 3, 0), (4, 4, 1)]


@given(labels_st)
def test_runs_tile_the_sequence(y):
    runs = find_class_runs(y)
    assert runs[0].start == 1 and runs[-1].end == len(y)
    assert all(a.end + 1 == b.start and a.cls != b.cls for a, b in zip(runs, runs[1:]))


# -- boundary disturbance -------------------------------------------------------------
def test_disturb_trivial_cases():
    y = np.array([0] * 5 + [1] * 5 + [0] * 3)
    assert np.array_equal(disturb_boundaries(y, 0.0, 1), y)
    assert np.array_equal(disturb_boundaries(np.full(9, 1), 0.7, 1), np.full(9, 1))
    with pytest.raises(ConfigError):
        disturb_boundaries(y, 1.5, 0)


def test_disturb_two_runs_exhaustive_seed_sweep():
    y = np.array([0] * 10 + [1] * 10)
    seen = set()
    for seed in range(2000):
        out = disturb_boundaries(y, 0.4, seed)
        (a, b) = find_class_runs(out)
        assert (a.cls, b.cls) == (0, 1)
        assert abs(b.start - 11) <= 4
        seen.add(b.start)
    assert seen == set(range(7, 16))


@given(st.lists(st.integers(1, 12), min_size=1, max_size=8), st.floats(0, 1), st.integers(0, 10_000))
def test_disturb_preserves_runs_and_classes(lengths, ratio, seed):
    y = np.concatenate([np.full(n, i % 2) for i, n in enumerate(lengths)])
    out = disturb_boundaries(y, ratio, seed)
    assert [r.cls for r in find_class_runs(out)] == [r.cls for r in find_class_runs(y)]


def test_disturbed_fraction_grows_with_ratio():
    cfg = GeneratorConfig(n_intervals=4)
    ivs = generate_mvd(cfg, 0)
    fractions = []
    for ratio in (0.0, 0.2, 0.4):
        changed = []
        for seed in range(100):
            for iv in ivs:
                y = disturb_boundaries(iv.labels, ratio, seed * 31 + iv.interval_id)
                changed.append(np.mean(segment_labels(y, 16, 8) != segment_labels(iv.labels, 16, 8)))
        fractions.append(np.mean(changed))
    assert fractions[0] == 0.0
    assert fractions[0] <= fractions[1] <= fractions[2]


def test_disturb_dataset_keeps_clean_labels():
    ivs = generate_mvd(GeneratorConfig(n_intervals=3), 0)
    out = disturb_dataset(ivs, DisturbanceConfig(ratio=0.4, seed=2))
    for a, b in zip(ivs, out):
        assert np.array_equal(a.clean_labels, b.clean_labels)
        assert a.values is b.values
    assert any(not np.array_equal(a.labels, b.labels) for a, b in zip(ivs, out))
    same = disturb_dataset(ivs, DisturbanceConfig(ratio=0.0))
    assert all(np.array_equal(a.labels, b.labels) for a, b in zip(ivs, same))
    with pytest.raises(ConfigError):
        disturb_dataset(ivs, DisturbanceConfig(mode="symmetric", ratio=0.1))


# -- symmetric disturbance ----------------------------------------------------------------
def test_symmetric_examples():
    y = np.random.default_rng(0).integers(0, 2, 100)
    assert np.array_equal(disturb_symmetric(y, 0.0, 2, 0), y)
    assert np.array_equal(disturb_symmetric(y, 1.0, 2, 0), 1 - y)
    assert (disturb_symmetric(y, 0.2, 2, 0) != y).sum() == 20


@given(st.integers(2, 5), st.floats(0, 1), st.integers(0, 1000))
def test_symmetric_changes_exact_count(C, ratio, seed):
    y = np.random.default_rng(seed).integers(0, C, 37)
    out = disturb_symmetric(y, ratio, C, seed)
    assert (out != y).sum() == math.floor(ratio * 37)
    assert out.min() >= 0 and out.max() < C


# -- curriculum levels ---------------------------------------------------------------------
@pytest.mark.parametrize("K", range(10, 61))
def test_levels_match_chunk_oracle(K):
    assert assign_levels(K, 5).tolist() == chunk_oracle(K, 5)


def test_literal_endpoint_formulas_at_k10():
    core, edge = literal_level_bounds(10, 5)
    assert core == {5} and edge == {10}
    lv = assign_levels(10, 5)
    assert core <= {p for p in range(1, 11) if lv[p - 1] == 1}
    assert edge <= {p for p in range(1, 11) if lv[p - 1] == 5}


@pytest.mark.parametrize("K,size", [(100, 20), (10, 2)])
def test_level_sizes(K, size):
    assert np.bincount(assign_levels(K, 5), minlength=6)[1:].tolist() == [size] * 5


@given(st.integers(1, 300), st.integers(1, 8))
def test_levels_partition(K, N_l):
    lv = assign_levels(K, N_l)
    assert len(lv) == K and lv.min() >= 1 and lv.max() <= N_l
    if K >= 2 * N_l:
        sizes = np.bincount(lv, minlength=N_l + 1)[1:]
        assert sizes.max() - sizes.min() <= 2
        core, edge = literal_level_bounds(K, N_l)
        assert all(lv[p - 1] == 1 for p in core)
        assert all(lv[p - 1] == N_l for p in edge)


def test_short_runs_use_distance_rule():
    assert assign_levels(1, 5).tolist() == [1]
    assert assign_levels(4, 5).tolist() == [4, 2, 2, 4]


# -- sampling -----------------------------------------------------------------------------
def test_sampling_small_and_deterministic():
    ivs = generate_mvd(GeneratorConfig(n_intervals=10), 0)
    pool = sample_intervals_per_level(ivs, 1, 64, seed=3)
    assert len(pool.items) <= 5
    assert {it.level for it in pool.items} <= {1, 2, 3, 4, 5}
    again = sample_intervals_per_level(ivs, 1, 64, seed=3)
    assert [(i.source_id, i.start) for i in pool.items] == [(i.source_id, i.start) for i in again.items]


def test_sampling_distance_decreases_with_level():
    ivs = generate_mvd(GeneratorConfig(n_intervals=60), 0)
    pool = sample_intervals_per_level(ivs, 100, 64, seed=0)
    dist = {iv.interval_id: distance_to_boundary(iv.labels) for iv in ivs}
    means = [np.mean([dist[it.source_id][it.centre] for it in pool.items if it.level == lv])
             for lv in range(1, 6)]
    assert all(a > b for a, b in zip(means, means[1:]))


def test_sampling_undersampled_levels_are_recorded(caplog):
    iv = TimeInterval(0, 0, np.zeros((40, 1)), [0] * 20 + [1] * 20, [0] * 20 + [1] * 20)
    pool = sample_intervals_per_level([iv], 50, 16, seed=0)
    assert set(pool.undersampled) == {1, 2, 3, 4, 5}
    assert "eligible" in caplog.text


def test_segment_pool_ids_and_levels():
    ivs = generate_mvd(GeneratorConfig(n_intervals=8), 1)
    seqs = segment_pool(sample_intervals_per_level(ivs, 2, 64, 0), 16, 8)
    assert [s.interval_id for s in seqs] == list(range(len(seqs)))
    assert all(s.n_segments == 7 for s in seqs)


# -- splits --------------------------------------------------------------------------------
@pytest.mark.parametrize("G,scheme,n", [(4, (2, 1, 1), 12), (3, (1, 1, 1), 6)])
def test_split_counts(G, scheme, n):
    plan = make_splits(G, scheme)
    assert len(plan.folds) == n
    for f in plan.folds:
        assert not (set(f.train) & set(f.val) or set(f.train) & set(f.test) or set(f.val) & set(f.test))
        assert set(f.train) | set(f.val) | set(f.test) == set(range(G))
    assert len(set(plan.folds)) == n


def test_split_errors():
    with pytest.raises(ConfigError):
        make_splits(3, (2, 1, 1))


# -- JSONL -------------------------------------------------------------------------------
def test_interval_jsonl_roundtrip(tmp_path):
    ivs = disturb_dataset(generate_mvd(GeneratorConfig(n_intervals=3), 4), DisturbanceConfig(ratio=0.3))
    path = tmp_path / "d.jsonl"
    write_intervals(path, ivs)
    back = read_intervals(path)
    for a, b in zip(ivs, back):
        assert a.values.tobytes() == b.values.tobytes()
        assert a.labels.tolist() == b.labels.tolist()
        assert a.clean_labels.tolist() == b.clean_labels.tolist()
        assert (a.interval_id, a.group_id) == (b.interval_id, b.group_id)
    write_intervals(tmp_path / "e.jsonl", back)
    assert (tmp_path / "e.jsonl").read_bytes() == path.read_bytes()


def test_segment_jsonl_roundtrip(tmp_path):
    ivs = generate_mvd(GeneratorConfig(n_intervals=4), 2)
    seqs = segment_pool(sample_intervals_per_level(ivs, 2, 64, 0), 16, 8)
    write_segments(tmp_path / "s.jsonl", seqs)
    back = read_segments(tmp_path / "s.jsonl")
    for a, b in zip(seqs, back):
        assert a.segments.tobytes() == b.segments.tobytes()
        for field in ("seg_labels", "clean_seg_labels", "levels"):
            assert getattr(a, field).tolist() == getattr(b, field).tolist()
        assert (a.level, a.source_id, a.start, a.group_id) == (b.level, b.source_id, b.start, b.group_id)
