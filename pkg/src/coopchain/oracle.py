"""Centralized reference scheme and exhaustive one-shot search.

The search space is every assignment whose transmit sets stay within a
window of the message index and hold at most ``max_per_message``
transmitters, under the backhaul budget, paired with every choice of
active receivers.

:func:`eta_one_shot` does not walk that stream literally. Beams are chosen
per message, so a message's decodability depends only on its own transmit
set and on which nearby receivers are active. The search therefore fixes
the active set, picks the cheapest decodable transmit set for each active
message, and compares the total against the budget. :func:`eta_brute_force`
walks the literal stream and is kept as a cross-check for small networks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

from coopchain.core_model import MessageAssignment, ModelError
from coopchain.dof_engine import (
    TOL_DESIRED,
    InfeasibleScheme,
    Purpose,
    TransmissionScheme,
    check_generic,
    solve_beam,
    trial_channel,
)

MAX_CANDIDATES = 10**8


class SearchOverflow(RuntimeError):
    pass


@dataclass(frozen=True)
class SearchSpace:
    K: int
    window: int = 1
    max_per_message: int = 2
    budget: int | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ModelError(f"K must be >= 1, got {self.K}")
        if self.window < 0:
            raise ModelError("window must be >= 0")
        if self.max_per_message < 1:
            raise ModelError("max_per_message must be >= 1")
        if self.budget is None:
            object.__setattr__(self, "budget", self.K)

    def options(self, i: int) -> tuple[tuple[int, ...], ...]:
        """Allowed transmit sets for ``W_i`` in lexicographic order."""
        lo, hi = max(1, i - self.window), min(self.K, i + self.window)
        pool = range(lo, hi + 1)
        opts = [()]
        for r in range(1, self.max_per_message + 1):
            opts.extend(itertools.combinations(pool, r))
        return tuple(sorted(opts))


def fig1_scheme(K: int) -> TransmissionScheme:
    """The four-user block pattern repeated ``K / 4`` times.

    Per block at offset ``b``: ``W_{b+1}`` from ``{b+1, b+2}`` (delivered by
    ``b+1``, zero-forced at receiver ``b+2`` by ``b+2``), ``W_{b+2}`` from
    ``b+2``, ``W_{b+3}`` not sent, ``W_{b+4}`` from ``b+3``; transmitter
    ``b+4`` stays off.
    """
    if K < 4 or K % 4:
        raise ModelError(f"K must be a positive multiple of 4, got {K}")
    sets: list[frozenset[int]] = []
    purposes = {}
    active = set()
    for b in range(0, K, 4):
        sets += [frozenset({b + 1, b + 2}), frozenset({b + 2}), frozenset(), frozenset({b + 3})]
        active |= {b + 1, b + 2, b + 4}
        purposes[(b + 1, b + 1)] = Purpose.DELIVER
        purposes[(b + 1, b + 2)] = Purpose.CANCEL
        purposes[(b + 2, b + 2)] = Purpose.DELIVER
        purposes[(b + 4, b + 3)] = Purpose.DELIVER
    active_tx = frozenset(j for b in range(0, K, 4) for j in (b + 1, b + 2, b + 3))
    return TransmissionScheme(MessageAssignment(tuple(sets)), frozenset(active), active_tx, purposes)


def projected_candidates(space: SearchSpace) -> int:
    """Exact number of (assignment, active set) pairs in the stream."""
    # counts[c] = number of partial candidates using c transmit-set slots
    counts = {0: 1}
    for i in range(1, space.K + 1):
        nxt: dict[int, int] = {}
        for c, n in counts.items():
            for opt in space.options(i):
                c2 = c + len(opt)
                if c2 > space.budget:
                    continue
                # an empty set admits only "inactive"; a nonempty one both choices
                nxt[c2] = nxt.get(c2, 0) + n * (2 if opt else 1)
        counts = nxt
    return sum(counts.values())


def _guard(space: SearchSpace) -> None:
    n = projected_candidates(space)
    if n > MAX_CANDIDATES:
        raise SearchOverflow(f"K={space.K}: {n} candidates exceeds limit {MAX_CANDIDATES}")


def enumerate_feasible(space: SearchSpace) -> Iterator[tuple[MessageAssignment, frozenset[int]]]:
    """Yield every in-budget assignment with every admissible active set.

    Order is lexicographic in the assignment, then in the sorted active set.
    """
    _guard(space)
    per_msg = [space.options(i) for i in range(1, space.K + 1)]
    for combo in itertools.product(*per_msg):
        if sum(len(t) for t in combo) > space.budget:
            continue
        assignment = MessageAssignment(tuple(frozenset(t) for t in combo))
        support = [i for i, t in enumerate(combo, start=1) if t]
        subsets = sorted(
            s for r in range(len(support) + 1) for s in itertools.combinations(support, r)
        )
        for s in subsets:
            yield assignment, frozenset(s)


@dataclass(frozen=True)
class OracleResult:
    best_count: int
    witness: TransmissionScheme
    confirmed: bool
    candidates: int

    @property
    def K(self) -> int:
        return self.witness.K


def _rank_key(scheme: TransmissionScheme):
    return scheme.assignment.key(), tuple(sorted(scheme.active_receivers))


def eta_one_shot(
    space: SearchSpace,
    trials: int = 3,
    seed: int = 0,
    confirm_trials: int = 25,
) -> OracleResult:
    """Largest number of simultaneously decodable receivers in ``space``.

    Ties go to the lexicographically smallest assignment. The winner is
    re-verified on ``confirm_trials`` fresh draws.
    """
    _guard(space)
    K = space.K
    draws = [trial_channel(K, seed, t) for t in range(trials)]
    options = [space.options(i) for i in range(1, K + 1)]

    def reach(T: tuple[int, ...]) -> set[int]:
        return {r for j in T for r in (j, j + 1) if r <= K}

    @lru_cache(maxsize=None)
    def decodable(m: int, T: tuple[int, ...], local_active: frozenset[int]) -> bool:
        nulling = sorted(local_active - {m})
        for ch in draws:
            try:
                solve_beam(ch, m, T, nulling, TOL_DESIRED)
            except InfeasibleScheme:
                return False
        return True

    def feasible_options(m: int, active: frozenset[int]) -> list[tuple[int, ...]]:
        return [
            T for T in options[m - 1]
            if T and decodable(m, T, frozenset(active & reach(T)))
        ]

    checked = 0
    for size in range(K, -1, -1):
        best = None
        for A in itertools.combinations(range(1, K + 1), size):
            checked += 1
            active = frozenset(A)
            feas = {m: feasible_options(m, active) for m in A}
            if any(not f for f in feas.values()):
                continue
            min_cost = {m: min(len(T) for T in f) for m, f in feas.items()}
            if sum(min_cost.values()) > space.budget:
                continue
            # lexicographically smallest assignment within budget
            remaining = space.budget
            sets = []
            for m in range(1, K + 1):
                if m not in active:
                    sets.append(frozenset())
                    continue
                tail = sum(min_cost[x] for x in A if x > m)
                pick = next(T for T in feas[m] if len(T) + tail <= remaining)
                remaining -= len(pick)
                sets.append(frozenset(pick))
            cand = TransmissionScheme(MessageAssignment(tuple(sets)), active)
            if best is None or _rank_key(cand) < _rank_key(best):
                best = cand
        if best is not None:
            confirmed = check_generic(best, confirm_trials, seed + 1)
            return OracleResult(size, best, confirmed, checked)
    raise AssertionError("unreachable: the empty active set is always feasible")


def eta_brute_force(space: SearchSpace, trials: int = 3, seed: int = 0) -> OracleResult:
    """Literal walk over :func:`enumerate_feasible`; small K only."""
    best = None
    n = 0
    for assignment, active in enumerate_feasible(space):
        n += 1
        if best is not None and len(active) <= len(best.active_receivers):
            continue
        scheme = TransmissionScheme(assignment, active)
        if check_generic(scheme, trials, seed):
            best = scheme
    return OracleResult(len(best.active_receivers), best, True, n)
