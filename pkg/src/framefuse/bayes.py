"""Unnormalized recursive Bayesian update over per-frame category scores.

The core update takes the previous chained posterior for a category as the
prior, multiplies by the current frame's score for that category, and divides
by (prior * current + p_cnn) where p_cnn is the classifier's overall accuracy.
Posteriors are deliberately NOT renormalized to sum to 1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

DEFAULT_DEGENERACY_EPSILON = 1e-4
DEFAULT_HORIZON_CAP = 1000

# Chained posteriors collapse toward zero for long windows; empirically the
# chain is unusable beyond this many frames at realistic score levels.
MAX_RECOMMENDED_WINDOW = 7


class ScoreDomainError(ValueError):
    """A score is NaN, negative, above 1, or the update denominator is zero."""


class LabelSetMismatchError(ValueError):
    """Incoming frame labels differ from the labels already in the chain."""


def _check_score(name: str, value: float) -> None:
    if math.isnan(value) or value < 0.0 or value > 1.0:
        raise ScoreDomainError(f"{name} must be in [0, 1], got {value!r}")


@dataclass(frozen=True)
class CategoryDistribution:
    """One frame's classifier scores, keyed by category label."""

    frame_id: int
    scores: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.scores:
            raise ScoreDomainError("a frame needs at least one category score")
        for label, value in self.scores.items():
            _check_score(f"score[{label}]", value)
        object.__setattr__(self, "scores", dict(self.scores))

    @property
    def labels(self) -> frozenset:
        return frozenset(self.scores)


@dataclass(frozen=True)
class ClassifierProfile:
    """A classifier's identity, overall accuracy, and quality threshold."""

    model_name: str
    p_cnn: float
    q_threshold: float = 0.7

    def __post_init__(self) -> None:
        if math.isnan(self.p_cnn) or not 0.0 < self.p_cnn <= 1.0:
            raise ScoreDomainError(f"p_cnn must be in (0, 1], got {self.p_cnn!r}")
        if math.isnan(self.q_threshold) or not 0.0 < self.q_threshold <= 1.0:
            raise ScoreDomainError(
                f"q_threshold must be in (0, 1], got {self.q_threshold!r}"
            )


@dataclass(frozen=True)
class PosteriorState:
    """Chained per-category posteriors plus bookkeeping for one stream window.

    ``steps_applied`` counts frames chained since the window started; the
    first frame passes through verbatim, later frames go through the update.
    ``degenerate`` fires when every category has collapsed below
    ``degeneracy_epsilon``.
    """

    posteriors: Mapping[str, float] = field(default_factory=dict)
    steps_applied: int = 0
    degenerate: bool = False
    degeneracy_epsilon: float = DEFAULT_DEGENERACY_EPSILON

    def __post_init__(self) -> None:
        if self.steps_applied < 0:
            raise ValueError("steps_applied must be >= 0")
        object.__setattr__(self, "posteriors", dict(self.posteriors))

    @classmethod
    def initial(cls, epsilon: float = DEFAULT_DEGENERACY_EPSILON) -> "PosteriorState":
        return cls(posteriors={}, steps_applied=0, degeneracy_epsilon=epsilon)


def update_posterior(prior: float, current: float, p_cnn: float) -> float:
    """Single-category Bayes step: (prior*current) / (prior*current + p_cnn)."""
    _check_score("prior", prior)
    _check_score("current", current)
    _check_score("p_cnn", p_cnn)
    numerator = prior * current
    denominator = numerator + p_cnn
    if denominator == 0.0:
        raise ScoreDomainError("update denominator is zero (p_cnn and prior*current both 0)")
    return numerator / denominator


def chain_update(
    state: PosteriorState,
    frame: CategoryDistribution,
    profile: ClassifierProfile,
) -> PosteriorState:
    """Advance the chained posterior with one frame, returning a new state.

    An empty state adopts the frame's raw scores verbatim; afterwards every
    category's posterior is fed back as the prior for the next frame.
    """
    if state.steps_applied == 0:
        new_posteriors: Dict[str, float] = dict(frame.scores)
    else:
        if frame.labels != frozenset(state.posteriors):
            raise LabelSetMismatchError(
                f"frame {frame.frame_id} labels {sorted(frame.labels)} != "
                f"chain labels {sorted(state.posteriors)}"
            )
        new_posteriors = {
            label: update_posterior(state.posteriors[label], frame.scores[label], profile.p_cnn)
            for label in state.posteriors
        }
    degenerate = max(new_posteriors.values()) < state.degeneracy_epsilon
    return PosteriorState(
        posteriors=new_posteriors,
        steps_applied=state.steps_applied + 1,
        degenerate=degenerate,
        degeneracy_epsilon=state.degeneracy_epsilon,
    )


def argmax_label(posteriors: Mapping[str, float]) -> Tuple[str, float]:
    """Label with the highest posterior; ties break lexicographically."""
    if not posteriors:
        raise ValueError("cannot take argmax of an empty posterior map")
    best_value = max(posteriors.values())
    best_label = min(label for label, value in posteriors.items() if value == best_value)
    return best_label, best_value


def degeneracy_horizon(
    representative_score: float,
    p_cnn: float,
    epsilon: float = DEFAULT_DEGENERACY_EPSILON,
    max_steps: int = DEFAULT_HORIZON_CAP,
) -> Optional[int]:
    """Smallest frame count k at which a chain of identical scores drops below epsilon.

    Iterates the update directly. Returns None when the chain has not dropped
    below epsilon within ``max_steps`` frames.
    """
    if not 0.0 < representative_score <= 1.0:
        raise ScoreDomainError("representative_score must be in (0, 1]")
    if not 0.0 < p_cnn <= 1.0:
        raise ScoreDomainError("p_cnn must be in (0, 1]")
    if not 0.0 < epsilon < 1.0:
        raise ScoreDomainError("epsilon must be in (0, 1)")
    posterior = representative_score
    for k in range(1, max_steps + 1):
        if posterior < epsilon:
            return k
        posterior = update_posterior(posterior, representative_score, p_cnn)
    return None


def warn_if_window_too_long(capacity_n: int) -> None:
    if capacity_n > MAX_RECOMMENDED_WINDOW:
        warnings.warn(
            f"frame window of {capacity_n} exceeds the recommended maximum of "
            f"{MAX_RECOMMENDED_WINDOW}; chained posteriors are likely to collapse",
            stacklevel=3,
        )
