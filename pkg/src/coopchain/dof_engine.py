"""Zero-forcing beam construction and coefficient-level decodability checks.

Every transmitted message gets one real beam coefficient per transmitter in
its transmit set. A receiver decodes when its own message arrives with a
nonzero aggregate gain and every other transmitted message aggregates to
zero there. Degrees of freedom are then counted exactly: one per decodable
active receiver per channel use.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from coopchain.core_model import (
    ChannelRealization,
    DofResult,
    MessageAssignment,
    ModelError,
    build_topology,
    draw_channel,
)

TOL_INTERFERENCE = 1e-9
TOL_DESIRED = 1e-6
# relative singular-value cutoff for the nulling rank check
RANK_RTOL = 1e-10


class InfeasibleScheme(Exception):
    """The nulling constraints force a desired coefficient to zero."""


class UnverifiedScheme(ValueError):
    pass


class Purpose(str, enum.Enum):
    DELIVER = "deliver"
    CANCEL = "cancel"


@dataclass(frozen=True)
class TransmissionScheme:
    assignment: MessageAssignment
    active_receivers: frozenset[int]
    active_transmitters: frozenset[int] = None
    purposes: Mapping[tuple[int, int], Purpose] = None

    def __post_init__(self):
        A = self.assignment
        rx = frozenset(self.active_receivers)
        object.__setattr__(self, "active_receivers", rx)
        for i in rx:
            if not 1 <= i <= A.K:
                raise ModelError(f"active receiver {i} outside [1, {A.K}]")
            if not A.T(i):
                raise ModelError(f"receiver {i} is active but T_{i} is empty")
        carried = frozenset(j for i in rx for j in A.T(i))
        if self.active_transmitters is None:
            object.__setattr__(self, "active_transmitters", carried)
        else:
            tx = frozenset(self.active_transmitters)
            object.__setattr__(self, "active_transmitters", tx)
            if carried - tx:
                raise ModelError(f"inactive transmitters {sorted(carried - tx)} carry messages")
        if self.purposes is None:
            purposes = {
                (i, j): Purpose.DELIVER if j in (i - 1, i) else Purpose.CANCEL
                for i in sorted(rx)
                for j in A.T(i)
            }
            object.__setattr__(self, "purposes", purposes)
        for (i, j) in self.purposes:
            if j not in A.T(i):
                raise ModelError(f"purpose entry ({i}, {j}) but {j} not in T_{i}")

    @property
    def K(self) -> int:
        return self.assignment.K

    def dof(self) -> DofResult:
        return DofResult(tuple(int(i in self.active_receivers) for i in range(1, self.K + 1)))


@dataclass(frozen=True)
class BeamDesign:
    """``coefficients[(m, j)]`` is the weight of ``W_m`` at transmitter ``j``."""

    coefficients: Mapping[tuple[int, int], float]

    def vector(self, message: int) -> dict[int, float]:
        return {j: v for (m, j), v in self.coefficients.items() if m == message}


@dataclass(frozen=True)
class ReceiverCheck:
    receiver: int
    decodable: bool
    desired_coeff: float
    max_interference_residual: float


def _nulling_receivers(scheme: TransmissionScheme, m: int) -> list[int]:
    K = scheme.K
    heard = set()
    for j in scheme.assignment.T(m):
        heard.update(r for r in (j, j + 1) if r <= K)
    return sorted((heard & scheme.active_receivers) - {m})


def solve_beam(
    channel: ChannelRealization,
    message: int,
    transmitters: Sequence[int],
    nulling_receivers: Sequence[int],
    desired_floor: float = TOL_DESIRED,
) -> np.ndarray:
    """Unit beam for one message over ``transmitters``.

    Zero at every receiver in ``nulling_receivers``; among such beams, the
    one with the largest gain at the message's own receiver.
    """
    m = message
    desired = np.array([channel.gain(m, j) for j in transmitters])
    rows = [[channel.gain(r, j) for j in transmitters] for r in nulling_receivers]
    if rows:
        _, s, vh = np.linalg.svd(np.array(rows))
        rank = int(np.sum(s > RANK_RTOL * s.max())) if s.size and s.max() > 0 else 0
        null = vh[rank:].T
    else:
        null = np.eye(len(transmitters))
    if null.shape[1] == 0:
        raise InfeasibleScheme(f"W_{m}: nulling system has only the zero solution")
    g = desired @ null
    gain = float(np.linalg.norm(g))
    if gain <= desired_floor:
        raise InfeasibleScheme(f"W_{m}: nulling forces the desired coefficient to zero")
    return null @ g / gain


def construct_beams(
    scheme: TransmissionScheme,
    channel: ChannelRealization,
    desired_floor: float = TOL_DESIRED,
) -> BeamDesign:
    """Solve each message's nulling system.

    The beam for ``W_m`` lies in the null space of the channel rows of every
    other active receiver its transmitters reach, and within that space it is
    the unit vector maximizing the gain at receiver ``m``.
    """
    if channel.K != scheme.K:
        raise ModelError(f"channel is for K={channel.K}, scheme for K={scheme.K}")
    coeffs: dict[tuple[int, int], float] = {}
    for m in sorted(scheme.active_receivers):
        tx = sorted(scheme.assignment.T(m))
        v = solve_beam(channel, m, tx, _nulling_receivers(scheme, m), desired_floor)
        for j, vj in zip(tx, v):
            coeffs[(m, j)] = float(vj)
    return BeamDesign(coeffs)


def aggregate(scheme, beams, channel, message: int, receiver: int) -> float:
    return sum(
        channel.gain(receiver, j) * v for j, v in beams.vector(message).items()
    )


def verify_receiver(
    scheme: TransmissionScheme,
    beams: BeamDesign,
    channel: ChannelRealization,
    i: int,
    tol_interference: float = TOL_INTERFERENCE,
    tol_desired: float = TOL_DESIRED,
) -> ReceiverCheck:
    if i not in scheme.active_receivers:
        raise ModelError(f"receiver {i} is not active")
    desired = aggregate(scheme, beams, channel, i, i)
    residual = max(
        (abs(aggregate(scheme, beams, channel, m, i)) for m in scheme.active_receivers if m != i),
        default=0.0,
    )
    ok = abs(desired) > tol_desired and residual <= tol_interference
    return ReceiverCheck(i, ok, desired, residual)


@dataclass(frozen=True)
class GenericReport:
    passed: bool
    trials: int
    max_residual: float = 0.0
    min_desired: float = float("inf")
    failure: str = ""


def trial_channel(K: int, seed: int, trial: int) -> ChannelRealization:
    return draw_channel(build_topology(K), [seed, trial])


def generic_report(
    scheme: TransmissionScheme,
    trials: int = 100,
    seed: int = 0,
    tol_interference: float = TOL_INTERFERENCE,
    tol_desired: float = TOL_DESIRED,
) -> GenericReport:
    """Run beam construction and every receiver check on ``trials`` draws."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    worst_res, worst_des = 0.0, float("inf")
    for t in range(trials):
        ch = trial_channel(scheme.K, seed, t)
        try:
            beams = construct_beams(scheme, ch, tol_desired)
        except InfeasibleScheme as e:
            return GenericReport(False, t + 1, worst_res, worst_des, str(e))
        for i in sorted(scheme.active_receivers):
            rc = verify_receiver(scheme, beams, ch, i, tol_interference, tol_desired)
            worst_res = max(worst_res, rc.max_interference_residual)
            worst_des = min(worst_des, abs(rc.desired_coeff))
            if not rc.decodable:
                return GenericReport(
                    False, t + 1, worst_res, worst_des, f"receiver {i} not decodable on trial {t}"
                )
    return GenericReport(True, trials, worst_res, worst_des)


def check_generic(
    scheme: TransmissionScheme,
    trials: int = 100,
    seed: int = 0,
    tol_interference: float = TOL_INTERFERENCE,
    tol_desired: float = TOL_DESIRED,
) -> bool:
    return generic_report(scheme, trials, seed, tol_interference, tol_desired).passed


def pu_dof(schemes: Sequence[TransmissionScheme], K: int, trials: int = 10, seed: int = 0) -> Fraction:
    """Active receivers per user per channel use, over one or more phases.

    Each scheme is re-verified on ``trials`` draws first.
    """
    if not schemes:
        raise ValueError("need at least one scheme")
    for p, s in enumerate(schemes):
        if s.K != K:
            raise ModelError(f"phase {p} scheme has K={s.K}, expected {K}")
        if not check_generic(s, trials, seed):
            raise UnverifiedScheme(f"phase {p} scheme fails generic verification")
    return Fraction(sum(len(s.active_receivers) for s in schemes), K * len(schemes))
