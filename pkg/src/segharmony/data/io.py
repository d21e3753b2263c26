"""JSON Lines persistence for recordings and segmented intervals."""
from __future__ import annotations

import json

import numpy as np

from .generate import TimeInterval
from .segment import SegmentSequence, segment_interval


def interval_to_record(iv: TimeInterval) -> dict:
    return {
        "interval_id": int(iv.interval_id),
        "group_id": int(iv.group_id),
        "values": iv.values.tolist(),
        "labels": iv.labels.tolist(),
        "clean_labels": iv.clean_labels.tolist(),
    }


def write_intervals(path, intervals):
    with open(path, "w") as fh:
        for iv in intervals:
            fh.write(json.dumps(interval_to_record(iv)) + "\n")


def read_intervals(path):
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                out.append(TimeInterval(rec["interval_id"], rec["group_id"], rec["values"],
                                        rec["labels"], rec["clean_labels"]))
    return out


def segments_to_record(seq: SegmentSequence) -> dict:
    # Windows overlap, so the covered points are stored once and re-cut on load.
    T = (seq.n_segments - 1) * seq.stride + seq.window_len
    values = np.empty((T, seq.segments.shape[2]))
    for i in range(seq.n_segments):
        values[i * seq.stride:i * seq.stride + seq.window_len] = seq.segments[i]
    return {
        "interval_id": int(seq.interval_id),
        "source_id": int(seq.source_id),
        "group_id": int(seq.group_id),
        "start": int(seq.start),
        "level": int(seq.level),
        "window_len": int(seq.window_len),
        "stride": int(seq.stride),
        "values": values.tolist(),
        "seg_labels": seq.seg_labels.tolist(),
        "clean_seg_labels": None if seq.clean_seg_labels is None else seq.clean_seg_labels.tolist(),
        "levels": seq.levels.tolist(),
    }


def write_segments(path, seqs):
    with open(path, "w") as fh:
        for seq in seqs:
            fh.write(json.dumps(segments_to_record(seq)) + "\n")


def read_segments(path):
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            values = np.asarray(rec["values"], dtype=np.float64)
            w, r = rec["window_len"], rec["stride"]
            dummy = np.zeros(values.shape[0], dtype=np.int64)
            seq = segment_interval(values, dummy, w, r, interval_id=rec["interval_id"],
                                   level=rec["level"], group_id=rec["group_id"],
                                   source_id=rec["source_id"], start=rec["start"])
            seq.seg_labels = np.asarray(rec["seg_labels"], dtype=np.int64)
            seq.levels = np.asarray(rec["levels"], dtype=np.int64)
            if rec.get("clean_seg_labels") is not None:
                seq.clean_seg_labels = np.asarray(rec["clean_seg_labels"], dtype=np.int64)
            out.append(seq)
    return out


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, tuple)):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
