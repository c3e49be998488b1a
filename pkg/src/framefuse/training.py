"""Hybrid training state machine over an abstract classifier backend.

Offline training, online cross-validation against a feed, refeed-stack
accumulation of misses, threshold-gated retraining, and a final accuracy
report. The backend is opaque: synthetic in-process or external over the
wire protocol.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .backends import BackendError, ClassifierBackend, LabeledItem
from .bayes import argmax_label

DEFAULT_Q = 0.7


class Phase(enum.Enum):
    OFFLINE = "offline"
    ONLINE_VALIDATION = "online_validation"
    RETRAIN = "retrain"
    DONE = "done"


# Legal transitions of the state machine.
ALLOWED_TRANSITIONS = {
    (Phase.OFFLINE, Phase.ONLINE_VALIDATION),
    (Phase.ONLINE_VALIDATION, Phase.DONE),
    (Phase.ONLINE_VALIDATION, Phase.RETRAIN),
    (Phase.RETRAIN, Phase.ONLINE_VALIDATION),
    (Phase.RETRAIN, Phase.DONE),
}


class PhaseError(RuntimeError):
    """An operation was invoked in the wrong phase."""


class ManifestError(ValueError):
    """Dataset manifest is malformed."""


@dataclass
class TrainingSession:
    """Mutable session state for one training run."""

    offline_set: List[LabeledItem]
    crossval_set: List[LabeledItem]
    q_threshold: float = DEFAULT_Q
    max_retrain_rounds: int = 1
    phase: Phase = Phase.OFFLINE
    refeed_stack: List[LabeledItem] = field(default_factory=list)
    accuracy_history: List[float] = field(default_factory=list)
    retrain_rounds_used: int = 0
    quality_met: Optional[bool] = None
    phase_history: List[Phase] = field(default_factory=lambda: [Phase.OFFLINE])

    @property
    def final_accuracy(self) -> Optional[float]:
        return self.accuracy_history[-1] if self.accuracy_history else None

    @property
    def best_accuracy(self) -> Optional[float]:
        return max(self.accuracy_history) if self.accuracy_history else None

    def _transition(self, new_phase: Phase) -> None:
        if (self.phase, new_phase) not in ALLOWED_TRANSITIONS:
            raise PhaseError(f"illegal transition {self.phase} -> {new_phase}")
        self.phase = new_phase
        self.phase_history.append(new_phase)


def evaluate_accuracy(backend: ClassifierBackend, labeled_set: Sequence[LabeledItem]) -> float:
    """Fraction of items whose argmax prediction matches the true label."""
    if not labeled_set:
        raise ValueError("cannot evaluate accuracy on an empty set")
    correct = 0
    for ref, true_label in labeled_set:
        predicted, _ = argmax_label(backend.predict(ref))
        if predicted == true_label:
            correct += 1
    return correct / len(labeled_set)


def run_offline(session: TrainingSession, backend: ClassifierBackend) -> TrainingSession:
    """Train the backend on the stock dataset and move to online validation."""
    if session.phase is not Phase.OFFLINE:
        raise PhaseError(f"run_offline called in phase {session.phase}")
    if not session.offline_set:
        raise ValueError("offline_set must be non-empty")
    try:
        backend.train(session.offline_set)
    except BackendError as exc:
        raise BackendError(f"offline training failed: {exc}") from exc
    session._transition(Phase.ONLINE_VALIDATION)
    return session


def run_online_validation(
    session: TrainingSession, backend: ClassifierBackend
) -> TrainingSession:
    """Predict every cross-validation item, stacking misses for refeeding."""
    if session.phase is not Phase.ONLINE_VALIDATION:
        raise PhaseError(f"run_online_validation called in phase {session.phase}")
    if not session.crossval_set:
        raise ValueError("crossval_set must be non-empty")
    correct = 0
    for ref, true_label in session.crossval_set:
        try:
            predicted, _ = argmax_label(backend.predict(ref))
        except BackendError as exc:
            done = correct + len(session.refeed_stack)
            raise BackendError(
                f"backend failed mid-validation after {done} of "
                f"{len(session.crossval_set)} items ({correct} correct): {exc}"
            ) from exc
        if predicted == true_label:
            correct += 1
        else:
            session.refeed_stack.append((ref, true_label))
    accuracy = correct / len(session.crossval_set)
    session.accuracy_history.append(accuracy)
    if accuracy >= session.q_threshold:
        session.quality_met = True
        session._transition(Phase.DONE)
    else:
        session._transition(Phase.RETRAIN)
    return session


def run_retrain(session: TrainingSession, backend: ClassifierBackend) -> TrainingSession:
    """Refeed the missed items, re-measure, and gate on the quality threshold."""
    if session.phase is not Phase.RETRAIN:
        raise PhaseError(f"run_retrain called in phase {session.phase}")
    session.retrain_rounds_used += 1
    if session.refeed_stack:
        backend.train(session.refeed_stack)
        accuracy = evaluate_accuracy(backend, session.crossval_set)
        session.accuracy_history.append(accuracy)
    else:
        accuracy = session.final_accuracy if session.final_accuracy is not None else 0.0
    session.refeed_stack.clear()
    if accuracy >= session.q_threshold:
        session.quality_met = True
        session._transition(Phase.DONE)
    elif session.retrain_rounds_used >= session.max_retrain_rounds:
        session.quality_met = False
        session._transition(Phase.DONE)
    else:
        session._transition(Phase.ONLINE_VALIDATION)
    return session


def run_session(session: TrainingSession, backend: ClassifierBackend) -> TrainingSession:
    """Drive the session from offline training to Done."""
    run_offline(session, backend)
    while session.phase is not Phase.DONE:
        if session.phase is Phase.ONLINE_VALIDATION:
            run_online_validation(session, backend)
        else:
            run_retrain(session, backend)
    return session


def session_report(session: TrainingSession) -> dict:
    return {
        "phases": [phase.value for phase in session.phase_history],
        "accuracy_history": session.accuracy_history,
        "final_accuracy": session.final_accuracy,
        "best_accuracy": session.best_accuracy,
        "retrain_rounds_used": session.retrain_rounds_used,
        "quality_met": bool(session.quality_met),
        "q_threshold": session.q_threshold,
    }


def load_manifest(path: Path) -> List[LabeledItem]:
    """Read a path,label CSV manifest."""
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"path", "label"} <= set(reader.fieldnames):
            raise ManifestError(f"{path}: manifest must have columns path,label")
        items: List[LabeledItem] = []
        for row_number, row in enumerate(reader, start=2):
            if not row.get("path") or not row.get("label"):
                raise ManifestError(f"{path}: row {row_number} missing path or label")
            items.append((row["path"], row["label"]))
    if not items:
        raise ManifestError(f"{path}: manifest is empty")
    return items
