"""Sliding-window duplicate filter over embedding cosine similarity.

Admitted alerts become references for the duration of the window; a new
alert whose best cosine score against a retained reference reaches the
threshold is dropped as a duplicate of that reference. First occurrence
wins: duplicates never become references themselves, so the surviving
representative keeps absorbing its repeats.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .alerts import Alert
from .embedding import EmbeddingVector


class OutOfOrderTimestamp(ValueError):
    """Alert arrived earlier than the last processed one beyond skew tolerance."""


@dataclass(frozen=True)
class DedupConfig:
    threshold: float = 0.95
    window: timedelta = timedelta(minutes=30)
    skew_tolerance: timedelta = timedelta(seconds=5)

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError("threshold must be in (0, 1]")
        if self.window <= timedelta(0):
            raise ValueError("window must be positive")


@dataclass(frozen=True)
class DedupVerdict:
    """Outcome of one dedup check.

    ``matched_id`` is present exactly when the alert is a duplicate.
    ``similarity`` carries the best score whenever at least one
    nonzero-embedding comparison occurred, duplicate or not.
    """

    is_duplicate: bool
    matched_id: str | None = None
    similarity: float | None = None


@dataclass
class _Reference:
    alert_id: str
    values: np.ndarray
    norm: float
    timestamp: datetime


class DedupFilter:
    """Single-writer duplicate filter; the orchestrator serializes calls."""

    def __init__(self, cfg: DedupConfig):
        self.cfg = cfg
        self._references: list[_Reference] = []
        self._last_timestamp: datetime | None = None

    def check_and_admit(self, alert: Alert, vec: EmbeddingVector) -> DedupVerdict:
        """Evict stale references, match against the rest, admit or drop.

        Zero-embedding alerts are always admitted but never stored, so they
        can neither match nor be matched.
        """
        if (
            self._last_timestamp is not None
            and alert.timestamp < self._last_timestamp - self.cfg.skew_tolerance
        ):
            raise OutOfOrderTimestamp(
                f"alert {alert.id} at {alert.timestamp} precedes "
                f"{self._last_timestamp} beyond {self.cfg.skew_tolerance}"
            )
        if self._last_timestamp is None or alert.timestamp > self._last_timestamp:
            self._last_timestamp = alert.timestamp

        horizon = alert.timestamp - self.cfg.window
        self._references = [r for r in self._references if r.timestamp >= horizon]

        if vec.is_zero:
            return DedupVerdict(is_duplicate=False)

        qnorm = float(np.linalg.norm(vec.values))
        best: _Reference | None = None
        best_sim: float | None = None
        for ref in self._references:
            sim = float(np.dot(vec.values, ref.values) / (qnorm * ref.norm))
            # best score wins; ties go to the earliest reference
            if (
                best_sim is None
                or sim > best_sim
                or (sim == best_sim and ref.timestamp < best.timestamp)
            ):
                best_sim = sim
                best = ref

        if best is not None and best_sim >= self.cfg.threshold:
            return DedupVerdict(is_duplicate=True, matched_id=best.alert_id, similarity=best_sim)

        self._references.append(
            _Reference(alert.id, vec.values, qnorm, alert.timestamp)
        )
        return DedupVerdict(is_duplicate=False, similarity=best_sim)

    @property
    def reference_count(self) -> int:
        return len(self._references)
