"""Streaming frame pipeline: FIFO frame window feeding the Bayes chain.

Each incoming frame produces one event carrying both the raw per-frame
verdict and the window-integrated verdict. JSON-lines in, JSON-lines or CSV
out.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .bayes import (
    CategoryDistribution,
    ClassifierProfile,
    PosteriorState,
    argmax_label,
    chain_update,
    warn_if_window_too_long,
    DEFAULT_DEGENERACY_EPSILON,
)

DEFAULT_WINDOW = 3


class OutOfOrderFrameError(ValueError):
    """frame_id not strictly greater than the previous frame for the stream."""


class StreamSchemaError(ValueError):
    """Malformed frame record; carries the 1-based input line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class StreamEvent:
    """Per-frame output: the classifier's verdict and the temporal verdict."""

    frame_id: int
    raw_label: str
    raw_scores: Mapping[str, float]
    tmav_label: str
    tmav_scores: Mapping[str, float]
    degenerate: bool
    wall_time: Optional[float] = None
    stream_id: str = ""


@dataclass(frozen=True)
class FrameWindowState:
    """FIFO of the most recent distributions plus the chained posterior."""

    stream_id: str
    capacity_n: int = DEFAULT_WINDOW
    queue: Tuple[CategoryDistribution, ...] = ()
    posterior: PosteriorState = field(default_factory=PosteriorState.initial)
    last_frame_id: Optional[int] = None

    def __post_init__(self) -> None:
        if self.capacity_n < 0:
            raise ValueError("capacity_n must be >= 0")
        warn_if_window_too_long(self.capacity_n)


@dataclass(frozen=True)
class StreamConfig:
    profile: ClassifierProfile
    capacity_n: int = DEFAULT_WINDOW
    auto_reset: bool = True
    frame_interval_seconds: Optional[float] = None
    degeneracy_epsilon: float = DEFAULT_DEGENERACY_EPSILON
    stream_id: str = ""


def reset_window(window: FrameWindowState) -> FrameWindowState:
    """Clear the queue and posterior; the frame_id watermark survives."""
    return replace(
        window,
        queue=(),
        posterior=PosteriorState.initial(window.posterior.degeneracy_epsilon),
    )


def push_frame(
    window: FrameWindowState,
    frame: CategoryDistribution,
    profile: ClassifierProfile,
) -> Tuple[FrameWindowState, StreamEvent]:
    """Admit one frame FIFO-wise and emit its raw + integrated verdicts."""
    if window.last_frame_id is not None and frame.frame_id <= window.last_frame_id:
        raise OutOfOrderFrameError(
            f"stream {window.stream_id!r}: frame_id {frame.frame_id} not after "
            f"{window.last_frame_id}"
        )
    queue = window.queue + (frame,)
    if window.capacity_n and len(queue) > window.capacity_n:
        queue = queue[len(queue) - window.capacity_n:]
    posterior = chain_update(window.posterior, frame, profile)
    raw_label, _ = argmax_label(frame.scores)
    tmav_label, _ = argmax_label(posterior.posteriors)
    event = StreamEvent(
        frame_id=frame.frame_id,
        raw_label=raw_label,
        raw_scores=dict(frame.scores),
        tmav_label=tmav_label,
        tmav_scores=dict(posterior.posteriors),
        degenerate=posterior.degenerate,
        stream_id=window.stream_id,
    )
    new_window = replace(
        window, queue=queue, posterior=posterior, last_frame_id=frame.frame_id
    )
    return new_window, event


def process_stream(
    frames: Iterable[CategoryDistribution],
    config: StreamConfig,
) -> List[StreamEvent]:
    """Run one stream through the window, optionally tumbling every N frames.

    With auto_reset on, the window restarts after every N chained frames and
    after any degenerate event; with it off, the chain runs continuously.
    """
    window = FrameWindowState(
        stream_id=config.stream_id,
        capacity_n=config.capacity_n,
        posterior=PosteriorState.initial(config.degeneracy_epsilon),
    )
    events: List[StreamEvent] = []
    for index, frame in enumerate(frames):
        window, event = push_frame(window, frame, config.profile)
        if config.frame_interval_seconds is not None:
            event = replace(event, wall_time=config.frame_interval_seconds * index)
        events.append(event)
        if config.auto_reset and (
            event.degenerate
            or (config.capacity_n and window.posterior.steps_applied >= config.capacity_n)
        ):
            window = reset_window(window)
    return events


def parse_frame_line(line: str, line_number: int) -> Tuple[str, CategoryDistribution]:
    """One JSONL record -> (stream_id, distribution). Raises StreamSchemaError."""
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise StreamSchemaError(line_number, f"invalid JSON: {exc}") from exc
    if not isinstance(record, dict):
        raise StreamSchemaError(line_number, "record must be a JSON object")
    try:
        stream_id = record["stream_id"]
        frame_id = record["frame_id"]
        scores = record["scores"]
    except KeyError as exc:
        raise StreamSchemaError(line_number, f"missing field {exc}") from exc
    if not isinstance(scores, dict) or not scores:
        raise StreamSchemaError(line_number, "scores must be a non-empty object")
    try:
        dist = CategoryDistribution(frame_id=int(frame_id), scores=scores)
    except (TypeError, ValueError) as exc:
        raise StreamSchemaError(line_number, str(exc)) from exc
    return str(stream_id), dist


def read_frame_streams(lines: Iterable[str]) -> Dict[str, List[CategoryDistribution]]:
    """Group JSONL frame records by stream_id, preserving per-stream order."""
    streams: Dict[str, List[CategoryDistribution]] = {}
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        stream_id, dist = parse_frame_line(line, line_number)
        streams.setdefault(stream_id, []).append(dist)
    return streams


def event_to_dict(event: StreamEvent) -> dict:
    record = {
        "stream_id": event.stream_id,
        "frame_id": event.frame_id,
        "raw_label": event.raw_label,
        "raw_scores": event.raw_scores,
        "tmav_label": event.tmav_label,
        "tmav_scores": event.tmav_scores,
        "degenerate": event.degenerate,
    }
    if event.wall_time is not None:
        record["wall_time"] = event.wall_time
    return record


def events_to_jsonl(events: Sequence[StreamEvent]) -> str:
    return "".join(json.dumps(event_to_dict(e), sort_keys=True) + "\n" for e in events)


def events_to_csv(events: Sequence[StreamEvent]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame_id", "raw_label", "tmav_label", "degenerate"])
    for event in events:
        writer.writerow(
            [event.frame_id, event.raw_label, event.tmav_label, str(event.degenerate).lower()]
        )
    return buf.getvalue()


def analyzable_snippet_seconds(frame_interval_seconds: float, window_cap: int = 7) -> float:
    """Longest video snippet the chain can cover before collapsing."""
    return frame_interval_seconds * window_cap
