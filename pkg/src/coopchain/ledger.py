"""Append-only hash-chained ledger of single-coin payments.

Two payment reasons exist. An interference coin flows forward
(``payee == payer + 1``); a rent coin flows backward
(``payee == payer - 1``) and is tagged with whether the payer used the
payee's transmitter or had it silenced.
"""

from __future__ import annotations

import enum
import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Mapping

GENESIS_HASH = bytes(32)
SCHEMA_VERSION = 1


class LedgerError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class Reason(str, enum.Enum):
    INTERFERENCE = "interference"
    RENT = "rent"


class RentMode(str, enum.Enum):
    USE = "use"
    SILENCE = "silence"


@dataclass(frozen=True)
class Transaction:
    payer: int
    payee: int
    reason: Reason
    mode: RentMode | None = None
    phase: int = 0
    sequence: int = 0
    amount: int = 1

    def to_dict(self) -> dict:
        return {
            "payer": self.payer,
            "payee": self.payee,
            "reason": getattr(self.reason, "value", self.reason),
            "mode": getattr(self.mode, "value", self.mode),
            "phase": self.phase,
            "sequence": self.sequence,
            "amount": self.amount,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Transaction":
        # Deliberately unchecked so that tampered exports can be loaded and audited.
        reason = d["reason"]
        mode = d.get("mode")
        try:
            reason = Reason(reason)
        except ValueError:
            pass
        if mode is not None:
            try:
                mode = RentMode(mode)
            except ValueError:
                pass
        return cls(d["payer"], d["payee"], reason, mode, d["phase"], d["sequence"], d["amount"])

    def canonical_bytes(self) -> bytes:
        d = self.to_dict()
        fields = [str(d[k]) if d[k] is not None else "" for k in
                  ("payer", "payee", "reason", "mode", "phase", "sequence", "amount")]
        return b"".join(_frame(f.encode()) for f in fields)


def _frame(b: bytes) -> bytes:
    return len(b).to_bytes(4, "big") + b


def check_transaction(txn: Transaction, K: int | None = None) -> None:
    """Raise :class:`LedgerError` unless ``txn`` obeys the direction rules."""
    if txn.amount != 1:
        raise LedgerError(f"single coin type: amount must be 1, got {txn.amount}")
    if not isinstance(txn.reason, Reason):
        raise LedgerError(f"unknown payment reason {txn.reason!r}")
    if txn.reason is Reason.INTERFERENCE:
        if txn.payee != txn.payer + 1:
            raise LedgerError(
                f"interference coins flow forward: {txn.payer}->{txn.payee} rejected"
            )
        if txn.mode is not None:
            raise LedgerError("interference payment carries no rent mode")
    else:
        if txn.payee != txn.payer - 1:
            raise LedgerError(f"rent coins flow backward: {txn.payer}->{txn.payee} rejected")
        if not isinstance(txn.mode, RentMode):
            raise LedgerError(f"rent payment needs a mode, got {txn.mode!r}")
    if not 0 <= txn.phase <= 3:
        raise LedgerError(f"phase must be in 0..3, got {txn.phase}")
    lo, hi = 1, K if K is not None else None
    for node in (txn.payer, txn.payee):
        if node < lo or (hi is not None and node > hi):
            raise LedgerError(f"node {node} out of range")


def block_digest(prev_hash: bytes, transactions: Iterable[Transaction]) -> bytes:
    txns = list(transactions)
    h = hashlib.sha256()
    h.update(_frame(prev_hash))
    h.update(_frame(str(len(txns)).encode()))
    for t in txns:
        h.update(_frame(t.canonical_bytes()))
    return h.digest()


@dataclass(frozen=True)
class LedgerBlock:
    prev_hash: bytes
    transactions: tuple[Transaction, ...]
    block_hash: bytes

    def to_dict(self) -> dict:
        return {
            "prev_hash": self.prev_hash.hex(),
            "transactions": [t.to_dict() for t in self.transactions],
            "block_hash": self.block_hash.hex(),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "LedgerBlock":
        return cls(
            bytes.fromhex(d["prev_hash"]),
            tuple(Transaction.from_dict(t) for t in d["transactions"]),
            bytes.fromhex(d["block_hash"]),
        )


@dataclass(frozen=True)
class ChainStatus:
    ok: bool
    position: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_chain(blocks: Iterable[LedgerBlock], K: int | None = None) -> ChainStatus:
    """Recompute every digest and re-check every transaction.

    Returns the position (0-based block index) of the first failure.
    """
    prev = GENESIS_HASH
    last_seq = None
    for pos, b in enumerate(blocks):
        if b.prev_hash != prev:
            return ChainStatus(False, pos, "prev_hash does not match preceding block")
        if block_digest(b.prev_hash, b.transactions) != b.block_hash:
            return ChainStatus(False, pos, "block hash mismatch")
        for t in b.transactions:
            try:
                check_transaction(t, K)
            except LedgerError as e:
                return ChainStatus(False, pos, str(e))
            if last_seq is not None and t.sequence <= last_seq:
                return ChainStatus(False, pos, "sequence not strictly increasing")
            last_seq = t.sequence
        prev = b.block_hash
    return ChainStatus(True)


def coin_endowment(K: int) -> dict[int, int]:
    """Two coins at every node with index 1 mod 4."""
    return {i: 2 for i in range(1, K + 1, 4)}


@dataclass
class Ledger:
    K: int
    blocks: list[LedgerBlock] = field(default_factory=list)
    pending: list[Transaction] = field(default_factory=list)

    @property
    def head_hash(self) -> bytes:
        return self.blocks[-1].block_hash if self.blocks else GENESIS_HASH

    @property
    def last_sequence(self) -> int | None:
        for t in reversed(self.pending):
            return t.sequence
        for b in reversed(self.blocks):
            if b.transactions:
                return b.transactions[-1].sequence
        return None

    def append_transaction(self, txn: Transaction) -> "Ledger":
        check_transaction(txn, self.K)
        last = self.last_sequence
        if last is not None and txn.sequence <= last:
            raise LedgerError(f"sequence {txn.sequence} not after {last}")
        self.pending.append(txn)
        return self

    def extend(self, txns: Iterable[Transaction]) -> "Ledger":
        for t in txns:
            self.append_transaction(t)
        return self

    def seal_block(self) -> LedgerBlock:
        txns = tuple(self.pending)
        block = LedgerBlock(self.head_hash, txns, block_digest(self.head_hash, txns))
        self.blocks.append(block)
        self.pending.clear()
        return block

    def validate(self) -> ChainStatus:
        return validate_chain(self.blocks, self.K)

    def transactions(self, include_pending: bool = True) -> Iterator[Transaction]:
        for b in self.blocks:
            yield from b.transactions
        if include_pending:
            yield from self.pending

    def flows(self, node: int) -> tuple[int, int]:
        """``(received, paid)`` coin counts for ``node`` over the whole ledger."""
        received = sum(t.amount for t in self.transactions() if t.payee == node)
        paid = sum(t.amount for t in self.transactions() if t.payer == node)
        return received, paid

    def balance(self, endowment: Mapping[int, int], node: int) -> int:
        received, paid = self.flows(node)
        return endowment.get(node, 0) + received - paid

    def balances(self, endowment: Mapping[int, int]) -> dict[int, int]:
        bal = Counter({i: 0 for i in range(1, self.K + 1)})
        bal.update(endowment)
        for t in self.transactions():
            bal[t.payer] -= t.amount
            bal[t.payee] += t.amount
        return dict(sorted(bal.items()))

    def min_balance(self, endowment: Mapping[int, int]) -> int:
        """Lowest balance any node reaches at any transaction prefix."""
        bal = Counter({i: 0 for i in range(1, self.K + 1)})
        bal.update(endowment)
        low = min(bal.values())
        for t in self.transactions():
            bal[t.payer] -= t.amount
            bal[t.payee] += t.amount
            low = min(low, bal[t.payer])
        return low

    def net_over_rotation(self, node: int, partial: bool = False) -> int:
        """Coins received minus coins paid across a four-phase rotation."""
        if not partial and len(self.blocks) < 4:
            raise LedgerError(
                f"rotation incomplete: {len(self.blocks)} of 4 phase blocks sealed"
            )
        received, paid = self.flows(node)
        return received - paid

    def write_jsonl(self, fh: IO[str]) -> None:
        for b in self.blocks:
            fh.write(json.dumps(b.to_dict(), sort_keys=True) + "\n")

    def dumps(self) -> str:
        return "".join(json.dumps(b.to_dict(), sort_keys=True) + "\n" for b in self.blocks)

    @classmethod
    def read_jsonl(cls, lines: Iterable[str], K: int | None = None) -> "Ledger":
        blocks = [LedgerBlock.from_dict(json.loads(line)) for line in lines if line.strip()]
        if K is None:
            K = max((max(t.payer, t.payee) for b in blocks for t in b.transactions), default=1)
        return cls(K, blocks)
