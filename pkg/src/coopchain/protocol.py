"""Coordination messages and the greedy per-node state machine.

Nodes run in ascending index order. Each one reads the coordination
message (CM) and payment flag left by its predecessor, decides what to
transmit and whom to pay, and hands a CM to its successor.

Network edges: anything addressed to node ``K + 1`` or node ``0`` is
dropped, and so is any action on transmitter ``0`` or message ``W_0``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from coopchain.core_model import MessageAssignment, ModelError
from coopchain.dof_engine import Purpose, TransmissionScheme
from coopchain.ledger import Reason, RentMode, Transaction


class ProtocolError(ValueError):
    pass


class CM(enum.IntEnum):
    """Two-bit coordination alphabet; the integer value is the wire code."""

    CM1 = 0b00  # willing to be paid to turn my transmitter off
    CM2 = 0b01  # willing to rent my transmitter out
    CM3 = 0b10  # not for hire, your receiver can be active
    CM4 = 0b11  # not for hire, your receiver must stay inactive

    @property
    def bits(self) -> str:
        return format(int(self), "02b")


CM_BITS = 2


def encode_cm(m: CM) -> str:
    return CM(m).bits


def decode_cm(bits: str | int) -> CM:
    if isinstance(bits, str):
        if len(bits) != CM_BITS or set(bits) - {"0", "1"}:
            raise ProtocolError(f"not a 2-bit code: {bits!r}")
        bits = int(bits, 2)
    return CM(bits)


class Offer(enum.Enum):
    GRANT_TX_USE = "grant_tx_use"
    GRANT_TX_OFF = "grant_tx_off"


@dataclass(frozen=True)
class NodeInbox:
    cm: CM
    paid_by_predecessor: bool = False

    def __post_init__(self):
        object.__setattr__(self, "cm", CM(self.cm))
        if self.paid_by_predecessor and self.cm not in (CM.CM3, CM.CM4):
            raise ProtocolError(
                f"interference payment cannot accompany {self.cm.name}: "
                "only an active predecessor transmitter pays forward"
            )


# Inbox a node of each periodic role receives inside an infinite network.
_ROLE_INBOX = {
    1: NodeInbox(CM.CM3, False),
    2: NodeInbox(CM.CM3, True),
    3: NodeInbox(CM.CM4, True),
    4: NodeInbox(CM.CM2, False),
}


def bootstrap_inbox(role: int = 1) -> NodeInbox:
    """Fictitious inbox handed to node 1.

    The default ``role=1`` is the unshifted start: CM3 with no payment.
    Other roles are used by index-shifted phases of a fairness rotation.
    """
    try:
        return _ROLE_INBOX[role]
    except KeyError:
        raise ProtocolError(f"role must be in 1..4, got {role}") from None


@dataclass(frozen=True)
class TransmitAction:
    message: int
    transmitter: int
    purpose: Purpose


@dataclass(frozen=True)
class Payment:
    payee: int
    reason: Reason
    mode: RentMode | None = None


@dataclass(frozen=True)
class NodeOutcome:
    node: int
    inbox: NodeInbox
    branch: str
    transmit_actions: frozenset[TransmitAction]
    payments: tuple[Payment, ...]
    outgoing_cm: CM
    cm_sent: bool
    turned_off: int | None = None
    subroutine: Offer | None = None

    @property
    def delivers(self) -> bool:
        return any(a.purpose is Purpose.DELIVER for a in self.transmit_actions)


def step_node(
    i: int,
    K: int,
    inbox: NodeInbox | tuple[CM, bool],
    backhaul_left: int | None = None,
) -> NodeOutcome:
    """Run one node of the greedy algorithm.

    Exactly one branch fires, selected by ``inbox.cm``. Returns the node's
    transmit actions, payments and the CM for node ``i + 1``.

    ``backhaul_left`` is how many message instances the network may still
    place before the average load exceeds one (``None``: unlimited). A node
    that would need to both deliver and zero-force beyond that stays idle
    and offers its transmitter instead.
    """
    if not isinstance(inbox, NodeInbox):
        inbox = NodeInbox(*inbox)
    if K < 1 or not 1 <= i <= K:
        raise ProtocolError(f"node {i} outside [1, {K}]")

    actions: list[TransmitAction] = []
    payments: list[Payment] = []
    turned_off = None
    subroutine = None

    if inbox.cm is CM.CM4:
        branch = "lines 1-3"
        out = CM.CM2
        subroutine = Offer.GRANT_TX_USE
    elif (
        inbox.cm is CM.CM3
        and inbox.paid_by_predecessor
        and i > 1
        and backhaul_left is not None
        and backhaul_left < 2
    ):
        branch = "lines 5-6, backhaul exhausted"
        out = CM.CM2
        subroutine = Offer.GRANT_TX_USE
    elif inbox.cm is CM.CM3:
        actions.append(TransmitAction(i, i, Purpose.DELIVER))
        payments.append(Payment(i + 1, Reason.INTERFERENCE))
        if inbox.paid_by_predecessor:
            branch = "lines 5-6, 8-9"
            if i > 1:
                actions.append(TransmitAction(i - 1, i, Purpose.CANCEL))
            out = CM.CM4
        else:
            branch = "lines 5-6, 11"
            out = CM.CM3
    elif inbox.cm is CM.CM2:
        branch = "lines 14-16"
        payments.append(Payment(i - 1, Reason.RENT, RentMode.USE))
        if i > 1:
            actions.append(TransmitAction(i, i - 1, Purpose.DELIVER))
        out = CM.CM1
        subroutine = Offer.GRANT_TX_OFF
    else:
        branch = "lines 18-21"
        payments.append(Payment(i - 1, Reason.RENT, RentMode.SILENCE))
        if i > 1:
            turned_off = i - 1
        actions.append(TransmitAction(i, i, Purpose.DELIVER))
        payments.append(Payment(i + 1, Reason.INTERFERENCE))
        out = CM.CM3

    payments = [p for p in payments if 1 <= p.payee <= K]
    return NodeOutcome(
        node=i,
        inbox=inbox,
        branch=branch,
        transmit_actions=frozenset(actions),
        payments=tuple(payments),
        outgoing_cm=out,
        cm_sent=i < K,
        turned_off=turned_off,
        subroutine=subroutine,
    )


@dataclass(frozen=True)
class ProtocolResult:
    K: int
    assignment: MessageAssignment
    active_receivers: frozenset[int]
    active_transmitters: frozenset[int]
    cm_trace: tuple[CM, ...]
    transactions: tuple[Transaction, ...]
    outcomes: tuple[NodeOutcome, ...]

    @property
    def cm_messages_sent(self) -> int:
        return sum(o.cm_sent for o in self.outcomes)

    @property
    def cm_bits_total(self) -> int:
        return CM_BITS * self.cm_messages_sent

    @property
    def setup_steps(self) -> int:
        """Sequential hand-offs before the last node can act."""
        return self.K - 1

    def scheme(self) -> TransmissionScheme:
        purposes = {
            (a.message, a.transmitter): a.purpose
            for o in self.outcomes
            for a in o.transmit_actions
        }
        return TransmissionScheme(
            self.assignment, self.active_receivers, self.active_transmitters, purposes
        )


def run_protocol(
    K: int,
    *,
    phase: int = 0,
    bootstrap: NodeInbox | None = None,
    first_sequence: int = 0,
) -> ProtocolResult:
    """Execute the algorithm over nodes ``1..K`` in ascending order."""
    if not isinstance(K, int) or K < 1:
        raise ModelError(f"network size must be a positive integer, got {K!r}")
    inbox = bootstrap if bootstrap is not None else bootstrap_inbox()
    sets: list[set[int]] = [set() for _ in range(K)]
    outcomes = []
    txns = []
    seq = first_sequence
    used = 0
    for i in range(1, K + 1):
        o = step_node(i, K, inbox, backhaul_left=K - used)
        used += len(o.transmit_actions)
        outcomes.append(o)
        for a in o.transmit_actions:
            sets[a.message - 1].add(a.transmitter)
        for p in o.payments:
            txns.append(Transaction(i, p.payee, p.reason, p.mode, phase=phase, sequence=seq))
            seq += 1
        paid_forward = any(p.payee == i + 1 for p in o.payments)
        inbox = NodeInbox(o.outgoing_cm, paid_forward)

    active_rx = frozenset(o.node for o in outcomes if o.delivers)
    turned_off = {o.turned_off for o in outcomes if o.turned_off is not None}
    active_tx = frozenset(j for t in sets for j in t)
    if used > K:
        raise ProtocolError(f"backhaul load {used}/{K} exceeds one")
    if active_tx & turned_off:
        raise ProtocolError(f"transmitters {sorted(active_tx & turned_off)} both used and silenced")
    return ProtocolResult(
        K=K,
        assignment=MessageAssignment(tuple(frozenset(s) for s in sets)),
        active_receivers=active_rx,
        active_transmitters=active_tx,
        cm_trace=tuple(o.outgoing_cm for o in outcomes),
        transactions=tuple(txns),
        outcomes=tuple(outcomes),
    )


def cm_sequence(names: Sequence[str]) -> tuple[CM, ...]:
    """``["CM3", "CM4"]`` -> ``(CM.CM3, CM.CM4)``; handy for golden traces."""
    return tuple(CM[n] for n in names)
