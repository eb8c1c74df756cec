"""Four-phase rotation that equalizes per-user DoF and settles coin balances.

Each message is split into three parts. In phase ``p`` the block pattern is
shifted forward by ``p`` nodes, so node ``i`` plays role
``((i - 1 - p) mod 4) + 1``; the role-3 node of every block stays silent
and the others send their next unsent part. Over four phases an interior
node plays every role once, is silent once, and pays exactly as many coins
as it receives.

At the network head, node 1 starts each phase with the inbox its role would
get from a predecessor. Where that role needs a transmitter that does not
exist (role 4 would rent transmitter 0) the node stays silent.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from coopchain.dof_engine import generic_report
from coopchain.ledger import Ledger, coin_endowment
from coopchain.protocol import ProtocolResult, bootstrap_inbox, run_protocol

PHASES = 4
PARTS = 3
INACTIVE_ROLE = 3


class RotationError(RuntimeError):
    pass


def role(i: int, phase: int) -> int:
    return ((i - 1 - phase) % 4) + 1


@dataclass(frozen=True)
class PhasePlan:
    shift: int
    roles: dict[int, int]
    parts: dict[int, int | None]

    @property
    def inactive(self) -> set[int]:
        return {i for i, r in self.roles.items() if r == INACTIVE_ROLE}


@dataclass(frozen=True)
class RotationPlan:
    K: int
    phases: tuple[PhasePlan, ...]


def rotation_schedule(K: int) -> RotationPlan:
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    sent = {i: 0 for i in range(1, K + 1)}
    phases = []
    for p in range(PHASES):
        roles = {i: role(i, p) for i in range(1, K + 1)}
        parts: dict[int, int | None] = {}
        for i, r in roles.items():
            if r == INACTIVE_ROLE:
                parts[i] = None
            else:
                sent[i] += 1
                parts[i] = sent[i]
        phases.append(PhasePlan(p, roles, parts))
    return RotationPlan(K, tuple(phases))


@dataclass
class RotationResult:
    K: int
    plan: RotationPlan
    phases: list[ProtocolResult]
    ledger: Ledger
    endowment: dict[int, int]
    per_user_dof: list[Fraction]
    puDoF: Fraction
    balances: dict[int, int]
    min_balance_seen: int
    nets: dict[int, int]
    parts_delivered: dict[int, list[tuple[int, int]]]

    @property
    def interior(self) -> list[int]:
        return list(range(5, self.K - 3))

    @property
    def interior_pu_dof(self) -> Fraction | None:
        nodes = self.interior
        if not nodes:
            return None
        return sum((self.per_user_dof[i - 1] for i in nodes), Fraction(0)) / len(nodes)

    @property
    def total_parts(self) -> int:
        return sum(len(v) for v in self.parts_delivered.values())


def run_rotation(K: int, trials: int = 25, seed: int = 0) -> RotationResult:
    """Run all four shifted phases, one ledger block per phase."""
    plan = rotation_schedule(K)
    ledger = Ledger(K)
    endowment = coin_endowment(K)
    results = []
    active_count = {i: 0 for i in range(1, K + 1)}
    parts: dict[int, list[tuple[int, int]]] = {i: [] for i in range(1, K + 1)}
    for p, phase in enumerate(plan.phases):
        seq = ledger.last_sequence
        res = run_protocol(
            K,
            phase=p,
            bootstrap=bootstrap_inbox(phase.roles[1]),
            first_sequence=0 if seq is None else seq + 1,
        )
        rep = generic_report(res.scheme(), trials, seed + p)
        if not rep.passed:
            raise RotationError(f"phase {p} fails generic verification: {rep.failure}")
        unplanned = set(res.active_receivers) & phase.inactive
        if unplanned:
            raise RotationError(f"phase {p}: role-3 nodes {sorted(unplanned)} became active")
        ledger.extend(res.transactions)
        ledger.seal_block()
        for i in res.active_receivers:
            active_count[i] += 1
            parts[i].append((p, len(parts[i]) + 1))
        results.append(res)

    per_user = [Fraction(active_count[i], PHASES) for i in range(1, K + 1)]
    return RotationResult(
        K=K,
        plan=plan,
        phases=results,
        ledger=ledger,
        endowment=endowment,
        per_user_dof=per_user,
        puDoF=Fraction(sum(active_count.values()), PHASES * K),
        balances=ledger.balances(endowment),
        min_balance_seen=ledger.min_balance(endowment),
        nets={i: ledger.net_over_rotation(i) for i in range(1, K + 1)},
        parts_delivered=parts,
    )
