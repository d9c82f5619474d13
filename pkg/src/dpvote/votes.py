"""Vote histograms and the boosted count vector fed to the noisy-argmax mechanisms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

__all__ = [
    "VoteHistogram",
    "BoostedVotes",
    "QueryRecord",
    "argmax",
    "gap",
    "is_distance_n",
    "boost",
]


@dataclass(frozen=True)
class VoteHistogram:
    """Per-class vote counts cast by an ensemble of teachers for a single query.

    Immutable after construction; the teacher count is the sum of the counts.
    """

    counts: tuple[int, ...]

    def __init__(self, counts: Iterable[int]) -> None:
        normalized = []
        for c in counts:
            ic = int(c)
            if ic != c:
                raise ValueError(f"vote counts must be integers, got {c!r}")
            if ic < 0:
                raise ValueError(f"vote counts must be non-negative, got {ic}")
            normalized.append(ic)
        if len(normalized) < 2:
            raise ValueError("a vote histogram needs at least two classes")
        if sum(normalized) < 1:
            raise ValueError("a vote histogram needs at least one vote")
        object.__setattr__(self, "counts", tuple(normalized))

    @property
    def num_classes(self) -> int:
        return len(self.counts)

    @property
    def teacher_count(self) -> int:
        return sum(self.counts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


@dataclass(frozen=True)
class BoostedVotes:
    """Real-valued counts after adding a constant to the winning bin.

    Counts are stored as float64 so that arbitrarily large boost constants are
    representable; for constants around 1e16 and beyond, adding a small number
    to the boosted bin is absorbed by floating-point rounding.  That only makes
    the argmax harder to move, and tests of flip behaviour use moderate
    constants where arithmetic is exact.
    """

    values: tuple[float, ...]
    boost_index: int
    boost_constant: float

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    @property
    def num_classes(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class QueryRecord:
    """One answered query: the histogram, the label returned, and optional truth."""

    query_id: int
    histogram: VoteHistogram
    returned_label: int
    ground_truth_label: Optional[int] = None

    def __post_init__(self) -> None:
        n = self.histogram.num_classes
        if not 0 <= self.returned_label < n:
            raise ValueError(f"returned label {self.returned_label} out of range [0, {n})")
        if self.ground_truth_label is not None and not 0 <= self.ground_truth_label < n:
            raise ValueError(f"ground truth label {self.ground_truth_label} out of range [0, {n})")


def argmax(votes: VoteHistogram) -> int:
    """Index of the largest count; ties resolve to the lowest index."""
    return int(np.argmax(votes.as_array()))


def gap(votes: VoteHistogram) -> int:
    """Difference between the largest and second-largest counts (0 for tied maxima)."""
    part = np.partition(votes.as_array(), -2)
    return int(part[-1] - part[-2])


def is_distance_n(votes: VoteHistogram, n: int) -> bool:
    """True when the top-two gap strictly exceeds ``n``."""
    if n < 0 or int(n) != n:
        raise ValueError(f"distance threshold must be a non-negative integer, got {n!r}")
    return gap(votes) > n


def boost(votes: VoteHistogram, boost_constant: float) -> BoostedVotes:
    """Add ``boost_constant`` to the winning bin, leaving every other count untouched.

    The argmax of the result equals the argmax of the input for any
    non-negative constant.
    """
    c = float(boost_constant)
    if not c >= 0.0:
        raise ValueError(f"boost constant must be non-negative, got {boost_constant!r}")
    idx = argmax(votes)
    values = votes.as_array().astype(np.float64)
    values[idx] += c
    return BoostedVotes(values=tuple(float(x) for x in values), boost_index=idx, boost_constant=c)
