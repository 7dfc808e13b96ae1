"""Symbol decisions and symbol error rates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_WINDOW = 10_000


def decide(y: float) -> int:
    """Nearest symbol of {-3, -1, 1, 3}; ties go to the larger symbol."""
    if not math.isfinite(y):
        raise ValueError(f"cannot decide on non-finite output {y}")
    if y >= 2.0:
        return 3
    if y >= 0.0:
        return 1
    if y >= -2.0:
        return -1
    return -3


def decide_array(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise ValueError("cannot decide on non-finite outputs")
    return (2 * np.digitize(y, [-2.0, 0.0, 2.0]) - 3).astype(np.int8)


def ser(decisions, targets, skip: int = 0) -> float:
    """Fraction of mismatches after dropping the first ``skip`` symbols."""
    decisions = np.asarray(decisions)[skip:]
    targets = np.asarray(targets)[skip:]
    if decisions.shape != targets.shape:
        raise ValueError(f"length mismatch: {decisions.shape} vs {targets.shape}")
    if decisions.size == 0:
        raise ValueError("no symbols left to count")
    return float(np.mean(decisions != targets))


@dataclass
class WindowedSer:
    index: np.ndarray
    ser: np.ndarray
    count: np.ndarray

    def __len__(self):
        return len(self.index)

    def errors(self) -> np.ndarray:
        return np.rint(self.ser * self.count).astype(np.int64)


def windowed_ser(errors, window: int = DEFAULT_WINDOW) -> WindowedSer:
    """Tumbling-window SER over a stream of per-symbol error flags.

    A trailing partial window is kept, with its own symbol count.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    e = np.asarray(errors, dtype=np.int64)
    n_win = -(-e.size // window)
    starts = np.arange(n_win) * window
    counts = np.minimum(window, e.size - starts)
    sums = np.add.reduceat(e, starts) if n_win else np.zeros(0, np.int64)
    return WindowedSer(np.arange(n_win), sums / np.maximum(counts, 1), counts)


@dataclass
class SerWindow:
    """Streaming tumbling-window counter.

    :meth:`add` returns the SER of a window when it completes, else ``None``.
    """

    window: int = DEFAULT_WINDOW
    errors: int = 0
    symbols: int = 0
    history: list = field(default_factory=list)

    def add(self, error: bool):
        self.errors += int(error)
        self.symbols += 1
        if self.symbols == self.window:
            value = self.errors / self.symbols
            self.history.append(value)
            self.errors = self.symbols = 0
            return value
        return None
