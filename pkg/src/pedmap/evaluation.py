"""Scoring replayed advisories against hand-labeled ground truth.

Ground truth is a set of arc-length windows along the test trace where an
advisory should have been active. Each maximal contiguous active span of a
timeline is one advisory event; an event is correct when it overlaps at least
one window, after extending the span by one sampling distance on each side so
a preemptive onset just before the window still gets credit. Precision is
correct events over all events; recall is correct events over correct events
plus missed windows. A zero denominator leaves the metric undefined rather
than zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Optional, Sequence, Union

from .advisory import AdvisoryConfig, AdvisoryTimeline, DriveTrace, run_replay, with_sampling_distance
from .ingest import HotspotMap

UNDEFINED_MARKER = "—"  # em dash rendered for an undefined metric


@dataclass(frozen=True, slots=True)
class GroundTruthWindow:
    """An arc-length span of the test trace where pedestrians warrant an advisory."""

    clip_id: str
    start_m: float
    end_m: float
    label: str = ""

    def __post_init__(self) -> None:
        if not 0 <= self.start_m < self.end_m:
            raise ValueError(f"window requires 0 <= start_m < end_m, got [{self.start_m}, {self.end_m}]")


@dataclass(frozen=True, slots=True)
class EvalCounts:
    correct: int
    false_advisories: int
    missed: int


@dataclass(frozen=True, slots=True)
class EvalRow:
    sampling_distance: float
    precision: Optional[float]
    recall: Optional[float]
    counts: EvalCounts


@dataclass(frozen=True, slots=True)
class EvalReport:
    rows: tuple[EvalRow, ...]


def _active_spans(timeline: AdvisoryTimeline) -> list[tuple[float, float]]:
    spans = []
    start: Optional[float] = None
    last: Optional[float] = None
    for d in timeline.decisions:
        arc = d.checkpoint.arc_position
        if d.active:
            if start is None:
                start = arc
            last = arc
        elif start is not None:
            spans.append((start, last))
            start = None
    if start is not None:
        spans.append((start, last))
    return spans


def match_advisories(timeline: AdvisoryTimeline, windows: Sequence[GroundTruthWindow]) -> EvalCounts:
    """Count correct/false advisory events and missed windows for one clip.

    An event and a window match when they overlap in positive length, with the
    event extended by one sampling distance on each side. One event spanning
    two windows counts once as correct and marks both windows matched.
    """
    for w in windows:
        if w.clip_id != timeline.clip_id:
            raise ValueError(
                f"clip mismatch: timeline is {timeline.clip_id!r}, window is {w.clip_id!r}"
            )
    k = timeline.sampling_distance
    correct = 0
    false_advisories = 0
    matched = [False] * len(windows)
    for span_start, span_end in _active_spans(timeline):
        lo = span_start - k
        hi = span_end + k
        hit_any = False
        for i, w in enumerate(windows):
            if min(hi, w.end_m) - max(lo, w.start_m) > 0:
                hit_any = True
                matched[i] = True
        if hit_any:
            correct += 1
        else:
            false_advisories += 1
    return EvalCounts(correct, false_advisories, matched.count(False))


def precision(counts: EvalCounts) -> Optional[float]:
    """Correct advisories over all advisories given; None when none were given."""
    denom = counts.correct + counts.false_advisories
    return counts.correct / denom if denom else None


def recall(counts: EvalCounts) -> Optional[float]:
    """Correct advisories over the advisories the system should have given."""
    denom = counts.correct + counts.missed
    return counts.correct / denom if denom else None


def sweep_sampling_distance(
    trace: DriveTrace,
    hotspot_map: HotspotMap,
    cfg: AdvisoryConfig,
    sampling_distances: Sequence[float],
    windows: Sequence[GroundTruthWindow],
) -> EvalReport:
    """Replay the drive once per sampling distance and score each run.

    Rows come back sorted ascending by sampling distance; duplicates collapse.
    """
    if not sampling_distances:
        raise ValueError("at least one sampling distance is required")
    rows = []
    for k in sorted(set(sampling_distances)):
        timeline = run_replay(trace, hotspot_map, with_sampling_distance(cfg, k))
        counts = match_advisories(timeline, windows)
        rows.append(EvalRow(k, precision(counts), recall(counts), counts))
    return EvalReport(tuple(rows))


# --- I/O ---------------------------------------------------------------------


def load_ground_truth(source: Union[IO[str], IO[bytes], str]) -> list[GroundTruthWindow]:
    """Read ground-truth windows from a JSON array, sorted by (clip_id, start_m).

    Windows within one clip must not overlap.
    """
    data = json.load(source) if hasattr(source, "read") else json.loads(source)
    if not isinstance(data, list):
        raise ValueError("ground truth must be a JSON array")
    windows = [
        GroundTruthWindow(w["clip_id"], float(w["start_m"]), float(w["end_m"]), w.get("label", ""))
        for w in data
    ]
    windows.sort(key=lambda w: (w.clip_id, w.start_m))
    for a, b in zip(windows, windows[1:]):
        if a.clip_id == b.clip_id and b.start_m < a.end_m:
            raise ValueError(f"overlapping windows in clip {a.clip_id!r} at {b.start_m}")
    return windows


def _fmt_metric(value: Optional[float]) -> str:
    return UNDEFINED_MARKER if value is None else f"{value:.6g}"


def report_to_tsv(report: EvalReport) -> str:
    """Tab-separated report; an undefined metric renders as an em dash."""
    lines = ["K_m\tprecision\trecall\tcorrect\tfalse\tmissed"]
    for row in report.rows:
        c = row.counts
        lines.append(
            f"{row.sampling_distance:.6g}\t{_fmt_metric(row.precision)}\t{_fmt_metric(row.recall)}"
            f"\t{c.correct}\t{c.false_advisories}\t{c.missed}"
        )
    return "\n".join(lines) + "\n"


def report_to_markdown(report: EvalReport) -> str:
    """Markdown table in the precision/recall-by-sampling-distance layout.

    An undefined metric prints as 0 (the convention of published result tables)
    but keeps a footnote marker so it is not mistaken for a measured zero.
    """
    lines = [
        "| Sampling Distance (m) | Precision | Recall |",
        "|---|---|---|",
    ]
    flagged = False

    def cell(value: Optional[float]) -> str:
        nonlocal flagged
        if value is None:
            flagged = True
            return "0*"
        return f"{value:.6g}"

    for row in report.rows:
        lines.append(f"| {row.sampling_distance:.6g} | {cell(row.precision)} | {cell(row.recall)} |")
    out = "\n".join(lines) + "\n"
    if flagged:
        out += "\n\\* no advisories issued; metric undefined\n"
    return out
