from .generate import GeneratorConfig, TimeInterval, class_signal, generate_mvd
from .segment import (
    ClassRun, SegmentSequence, assign_levels, chunk_index, distance_to_boundary,
    find_class_runs, literal_level_bounds, majority, n_windows, point_levels,
    segment_interval, segment_labels,
)
from .disturb import DisturbanceConfig, disturb_boundaries, disturb_dataset, disturb_symmetric
from .sampling import LevelPool, SubInterval, sample_intervals_per_level, segment_pool
from .splits import Fold, SplitPlan, make_splits
from .io import read_intervals, read_segments, write_intervals, write_json, write_segments

__all__ = [
    "GeneratorConfig", "TimeInterval", "class_signal", "generate_mvd",
    "ClassRun", "SegmentSequence", "assign_levels", "chunk_index", "distance_to_boundary",
    "find_class_runs", "literal_level_bounds", "majority", "n_windows", "point_levels",
    "segment_interval", "segment_labels",
    "DisturbanceConfig", "disturb_boundaries", "disturb_dataset", "disturb_symmetric",
    "LevelPool", "SubInterval", "sample_intervals_per_level", "segment_pool",
    "Fold", "SplitPlan", "make_splits",
    "read_intervals", "read_segments", "write_intervals", "write_json", "write_segments",
]
