"""Per-context operation counters.

Counting is off unless a :class:`OpCounter` is active. The active counter
lives in a context variable, so independent scenarios running in separate
threads never see each other's counts.
"""

from __future__ import annotations

import contextlib
import contextvars
from collections import Counter
from typing import Iterator

KINDS = ("exp", "inv", "xor")

_active: contextvars.ContextVar[OpCounter | None] = contextvars.ContextVar(
    "pvss_op_counter", default=None
)


class OpCounter:
    """Tallies modular exponentiations, inversions and XOR maskings by phase."""

    def __init__(self) -> None:
        self.phase = "unphased"
        self.counts: dict[str, Counter[str]] = {}

    def tick(self, kind: str) -> None:
        self.counts.setdefault(self.phase, Counter())[kind] += 1

    @contextlib.contextmanager
    def in_phase(self, phase: str) -> Iterator[None]:
        previous, self.phase = self.phase, phase
        self.counts.setdefault(phase, Counter())
        try:
            yield
        finally:
            self.phase = previous

    def as_dict(self) -> dict[str, dict[str, int]]:
        return {
            phase: {kind: counts.get(kind, 0) for kind in KINDS}
            for phase, counts in self.counts.items()
        }


def tick(kind: str) -> None:
    counter = _active.get()
    if counter is not None:
        counter.tick(kind)


@contextlib.contextmanager
def counting(counter: OpCounter | None = None) -> Iterator[OpCounter]:
    counter = counter if counter is not None else OpCounter()
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)


@contextlib.contextmanager
def paused() -> Iterator[None]:
    """Suspend counting, e.g. for audit checks that are not protocol work."""
    token = _active.set(None)
    try:
        yield
    finally:
        _active.reset(token)
