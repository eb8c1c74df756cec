"""Wyner linear network: topology, channel draws, message assignments.

Indices are 1-based everywhere. A link is written ``(tx, rx)``; channel
coefficients are looked up as ``H[rx, tx]`` to follow the usual
receiver-first convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np


class ModelError(ValueError):
    """Invalid network size, index or assignment."""


@dataclass(frozen=True)
class NetworkTopology:
    K: int

    def __post_init__(self):
        if not isinstance(self.K, (int, np.integer)) or self.K < 1:
            raise ModelError(f"network size must be a positive integer, got {self.K!r}")

    @property
    def links(self) -> tuple[tuple[int, int], ...]:
        """All ``(tx, rx)`` pairs with a nonzero channel, in tx order."""
        out = []
        for j in range(1, self.K + 1):
            out.append((j, j))
            if j < self.K:
                out.append((j, j + 1))
        return tuple(out)

    def connected(self, tx: int, rx: int) -> bool:
        return 1 <= tx <= self.K and rx in (tx, tx + 1) and rx <= self.K

    def receivers_of(self, tx: int) -> tuple[int, ...]:
        self._check(tx)
        return (tx,) if tx == self.K else (tx, tx + 1)

    def transmitters_of(self, rx: int) -> tuple[int, ...]:
        self._check(rx)
        return (rx,) if rx == 1 else (rx - 1, rx)

    def interferers_at(self, rx: int) -> set[int]:
        return set(self.transmitters_of(rx)) - {rx}

    def _check(self, idx: int) -> None:
        if not 1 <= idx <= self.K:
            raise ModelError(f"index {idx} outside [1, {self.K}]")


def build_topology(K: int) -> NetworkTopology:
    return NetworkTopology(K)


@dataclass(frozen=True)
class ChannelRealization:
    """One generic draw of the nonzero coefficients.

    ``entries`` maps ``(rx, tx)`` to ``H[rx, tx]`` for connected links only.
    """

    topology: NetworkTopology
    entries: Mapping[tuple[int, int], float]
    seed: int | None = None

    @property
    def K(self) -> int:
        return self.topology.K

    def gain(self, rx: int, tx: int) -> float:
        return self.entries.get((rx, tx), 0.0)

    def matrix(self) -> np.ndarray:
        """Dense K x K matrix, row = receiver, column = transmitter (0-based)."""
        H = np.zeros((self.K, self.K))
        for (rx, tx), h in self.entries.items():
            H[rx - 1, tx - 1] = h
        return H

    def scaled(self, factor: float) -> "ChannelRealization":
        if factor == 0:
            raise ModelError("scaling factor must be nonzero")
        return ChannelRealization(
            self.topology, {k: v * factor for k, v in self.entries.items()}, self.seed
        )


def draw_channel(topology: NetworkTopology, seed: int | Sequence[int]) -> ChannelRealization:
    """Standard-normal coefficients on exactly the connected links.

    Exact zeros are redrawn so every stored coefficient is nonzero.
    """
    rng = np.random.default_rng(seed)
    entries = {}
    for tx, rx in topology.links:
        h = 0.0
        while h == 0.0:
            h = float(rng.standard_normal())
        entries[(rx, tx)] = h
    return ChannelRealization(topology, entries, seed if isinstance(seed, int) else None)


@dataclass(frozen=True)
class MessageAssignment:
    """Transmit sets ``T_1..T_K``; ``transmit_sets[i - 1]`` holds ``T_i``."""

    transmit_sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        sets = tuple(frozenset(int(j) for j in t) for t in self.transmit_sets)
        object.__setattr__(self, "transmit_sets", sets)
        K = len(sets)
        if K < 1:
            raise ModelError("assignment needs at least one message")
        for i, t in enumerate(sets, start=1):
            bad = [j for j in t if not 1 <= j <= K]
            if bad:
                raise ModelError(f"T_{i} contains out-of-range transmitter(s) {sorted(bad)}")

    @classmethod
    def from_lists(cls, sets: Iterable[Iterable[int]]) -> "MessageAssignment":
        return cls(tuple(frozenset(s) for s in sets))

    @property
    def K(self) -> int:
        return len(self.transmit_sets)

    def T(self, i: int) -> frozenset[int]:
        return self.transmit_sets[i - 1]

    @property
    def total_instances(self) -> int:
        return sum(len(t) for t in self.transmit_sets)

    def as_lists(self) -> list[list[int]]:
        return [sorted(t) for t in self.transmit_sets]

    def key(self) -> tuple[tuple[int, ...], ...]:
        """Sortable form used for lexicographic tie-breaking."""
        return tuple(tuple(sorted(t)) for t in self.transmit_sets)


def backhaul_load(assignment: MessageAssignment | Sequence[Iterable[int]]) -> Fraction:
    """Average transmit-set size, exact."""
    if not isinstance(assignment, MessageAssignment):
        assignment = MessageAssignment.from_lists(assignment)
    return Fraction(assignment.total_instances, assignment.K)


@dataclass(frozen=True)
class DofResult:
    per_user: tuple[Fraction, ...]
    sum: Fraction = field(init=False)
    per_user_avg: Fraction = field(init=False)

    def __post_init__(self):
        per_user = tuple(Fraction(d) for d in self.per_user)
        if any(d < 0 or d > 1 for d in per_user):
            raise ModelError("per-user DoF must lie in [0, 1]")
        object.__setattr__(self, "per_user", per_user)
        object.__setattr__(self, "sum", sum(per_user, Fraction(0)))
        object.__setattr__(self, "per_user_avg", self.sum / len(per_user))
