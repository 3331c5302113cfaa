"""Bounded recall of past environment values and the estimates built on it."""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from typing import Iterable

from .model import UNBOUNDED


class NoHistoryError(LookupError):
    """Raised when an expectation is requested from an empty memory."""


class MemoryBuffer:
    """Window over the most recent environment values one party remembers.

    Values are stored raw and the mean is recomputed on every read, so the
    finite and unbounded cases share one code path. A finite buffer drops
    entries that fall out of the window.
    """

    def __init__(self, capacity: int | float = UNBOUNDED, entries: Iterable[float] = ()):
        if capacity != UNBOUNDED and (isinstance(capacity, bool) or not isinstance(capacity, int)
                                      or capacity < 1):
            raise ValueError(f"capacity must be a positive integer or inf, got {capacity!r}")
        self.capacity = capacity
        self._entries = deque(maxlen=None if capacity == UNBOUNDED else capacity)
        for value in entries:
            self.remember(value)

    def remember(self, value: float) -> "MemoryBuffer":
        self._entries.append(float(value))
        return self

    @property
    def entries(self) -> tuple[float, ...]:
        """The readable window, oldest first."""
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def expected_theta(self) -> float:
        """Mean of the readable window.

        Raises:
            NoHistoryError: if nothing has been remembered yet.
        """
        if not self._entries:
            raise NoHistoryError("memory is empty; no expectation can be formed")
        # shift by the oldest readable value so a constant window returns it exactly
        ref = self._entries[0]
        return ref + math.fsum(v - ref for v in self._entries) / len(self._entries)

    def copy(self) -> "MemoryBuffer":
        return MemoryBuffer(self.capacity, self._entries)

    def __repr__(self):
        return f"MemoryBuffer(capacity={self.capacity!r}, entries={list(self._entries)!r})"


def estimate_theta_principal(x: float | Fraction, a_induced: float) -> float:
    """Environment value implied by the outcome if the induced action was taken.

    ``x`` may be an exact ``Fraction`` so that the subtraction is rounded only
    once; with ``x = a + theta`` held exactly and ``a_induced == a`` the result
    is ``theta`` bit for bit.
    """
    if isinstance(x, Fraction):
        return float(x - Fraction(a_induced))
    return x - a_induced
