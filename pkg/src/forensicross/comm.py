"""Inter-blockchain communication: mutual-node translation and strict-majority
verification.

An origin transaction mined on its source chain is translated by every
mutual node of that chain into one canonical byte string and submitted to
the receiving contract (bridge or destination). The contract validates a
body once strictly more than half of the expected mutual nodes have
submitted byte-identical copies; once no body can still reach that
threshold the entry is rejected.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum

from .canonical import enc_bytes, enc_str, enc_str_list
from .chain import PayloadKind, Transaction
from .crypto import KeyPair, sign, verify


class NotMutualNode(Exception):
    pass


@dataclass(frozen=True)
class MutualNodeSet:
    """Nodes shared between one organization chain and its counterpart
    (the bridge, or the paired chain in a mesh). Size must be odd and > 2."""

    chain_id: str
    members: tuple[str, ...]

    def __post_init__(self):
        if len(self.members) <= 2:
            raise ValueError("mutual node set must have more than 2 members")
        if len(self.members) % 2 == 0:
            raise ValueError("mutual node set size must be odd")
        if len(set(self.members)) != len(self.members):
            raise ValueError("mutual node members must be distinct")

    @property
    def size(self) -> int:
        return len(self.members)


def canonical_translation(tx: Transaction) -> bytes:
    """The bridge-format body every honest translator produces for `tx`.

    Origin transactions are carried whole (their canonical serialization,
    original signature included); validated envelopes being forwarded a
    second hop pass their embedded origin through unchanged.
    """
    if tx.payload_kind is PayloadKind.INTERCHAIN_ENVELOPE:
        return tx.body
    return tx.canonical_bytes()


@dataclass(frozen=True)
class TranslatedEnvelope:
    origin_tx_id: str
    origin_chain: str
    destination_chains: tuple[str, ...]
    canonical_body: bytes
    translator_node: str
    translator_signature: bytes

    def attested_bytes(self) -> bytes:
        return (
            enc_str(self.origin_tx_id)
            + enc_str(self.origin_chain)
            + enc_str_list(self.destination_chains)
            + enc_bytes(self.canonical_body)
            + enc_str(self.translator_node)
        )


def translate(
    tx: Transaction,
    node: str,
    mutual_set: MutualNodeSet,
    node_key: KeyPair,
    corrupt: "callable | None" = None,
) -> TranslatedEnvelope:
    """One mutual node's rendering of `tx` into the standard format.

    Forwarded envelopes keep the embedded origin transaction's identity, so
    both verification hops of one routed transaction share a ledger key.
    `corrupt` is the fault-injection hook: a function over the honest body,
    applied only for compromised nodes.
    """
    if node not in mutual_set.members:
        raise NotMutualNode(f"{node} is not in the mutual set of {mutual_set.chain_id}")
    if tx.payload_kind is PayloadKind.INTERCHAIN_ENVELOPE:
        embedded = Transaction.from_canonical(tx.body)
        origin_tx_id, origin_chain = embedded.tx_id, embedded.source_chain
    else:
        origin_tx_id, origin_chain = tx.tx_id, tx.source_chain
    body = canonical_translation(tx)
    if corrupt is not None:
        body = corrupt(body)
    envelope = TranslatedEnvelope(
        origin_tx_id=origin_tx_id,
        origin_chain=origin_chain,
        destination_chains=tx.destination_chains,
        canonical_body=body,
        translator_node=node,
        translator_signature=b"",
    )
    return replace(
        envelope, translator_signature=sign(envelope.attested_bytes(), node_key)
    )


class VerifyStatus(Enum):
    PENDING = "Pending"
    VALIDATED = "Validated"
    REJECTED = "Rejected"
    EXPIRED = "Expired"


@dataclass
class LedgerEntry:
    """Per-origin-transaction verification state on one receiving contract."""

    origin_tx_id: str
    expected: int
    submissions: dict[str, TranslatedEnvelope] = field(default_factory=dict)
    duplicate_nodes: list[str] = field(default_factory=list)
    status: VerifyStatus = VerifyStatus.PENDING
    winning_body: bytes | None = None
    opened_tick: int = 0
    resolved_tick: int | None = None


def verify_translations(entry: LedgerEntry) -> VerifyStatus:
    """Recompute an entry's status from its counted submissions.

    Validated iff some body has strictly more than expected/2 distinct-node
    submissions; Rejected once no body (seen or future) can still get there.
    """
    counts = Counter(env.canonical_body for env in entry.submissions.values())
    threshold = entry.expected // 2 + 1  # strictly more than half
    for body, n in counts.items():
        if n >= threshold:
            entry.status = VerifyStatus.VALIDATED
            entry.winning_body = body
            return entry.status
    remaining = entry.expected - len(entry.submissions)
    best_possible = max(list(counts.values()) + [0]) + remaining
    if best_possible < threshold and remaining < threshold:
        entry.status = VerifyStatus.REJECTED
        return entry.status
    entry.status = VerifyStatus.PENDING
    return entry.status


class VerificationContract:
    """The communication smart contract's monitor/verify/count state for one
    receiving chain. `key_resolver` maps a translator node name to its
    public key so submissions can be attributed before counting."""

    def __init__(self, chain_id: str, key_resolver):
        self.chain_id = chain_id
        self.key_resolver = key_resolver
        self.entries: dict[str, LedgerEntry] = {}

    def entry_for(self, origin_tx_id: str, expected: int, tick: int) -> LedgerEntry:
        entry = self.entries.get(origin_tx_id)
        if entry is None:
            entry = LedgerEntry(origin_tx_id=origin_tx_id, expected=expected, opened_tick=tick)
            self.entries[origin_tx_id] = entry
        return entry

    def receive(
        self, envelope: TranslatedEnvelope, expected: int, tick: int
    ) -> tuple[LedgerEntry, VerifyStatus, bool]:
        """Count one submission; returns (entry, status, was_duplicate).

        A node's second submission for the same origin tx is ignored and
        recorded; a resolved entry never changes status again.
        """
        entry = self.entry_for(envelope.origin_tx_id, expected, tick)
        if envelope.translator_node in entry.submissions:
            entry.duplicate_nodes.append(envelope.translator_node)
            return entry, entry.status, True
        if not verify(
            envelope.attested_bytes(),
            envelope.translator_signature,
            self.key_resolver(envelope.translator_node),
        ):
            # unsigned/forged envelopes are not counted
            return entry, entry.status, False
        if entry.status in (VerifyStatus.VALIDATED, VerifyStatus.REJECTED):
            return entry, entry.status, False
        entry.submissions[envelope.translator_node] = envelope
        status = verify_translations(entry)
        if status in (VerifyStatus.VALIDATED, VerifyStatus.REJECTED):
            entry.resolved_tick = tick
        return entry, status, False

    def expire_stale(self, tick: int, timeout: int) -> list[LedgerEntry]:
        """Mark entries pending past the timeout as expired; returns them."""
        stalled = []
        for entry in self.entries.values():
            if entry.status is VerifyStatus.PENDING and tick - entry.opened_tick >= timeout:
                entry.status = VerifyStatus.EXPIRED
                entry.resolved_tick = tick
                stalled.append(entry)
        return stalled


@dataclass
class Hop:
    hop: str  # "mutual-receipt" | "bridge-verify" | "destination-verify"
    chain: str
    tick: int
    message_count: int
    status: str


@dataclass
class DeliveryReport:
    """Every hop a routed transaction took, with logical times and counts."""

    tx_id: str
    kind: str
    origin_chain: str
    destinations: tuple[str, ...]
    hops: list[Hop] = field(default_factory=list)
    mutual_receipt_tick: int | None = None
    accepted_ticks: dict[str, int] = field(default_factory=dict)
    status: str = "pending"
    winning_is_honest: bool | None = None

    @property
    def duration(self) -> int | None:
        if self.mutual_receipt_tick is None or not self.accepted_ticks:
            return None
        return max(self.accepted_ticks.values()) - self.mutual_receipt_tick

    @property
    def verification_events(self) -> int:
        return sum(1 for h in self.hops if h.hop.endswith("-verify"))

    @property
    def message_count(self) -> int:
        return sum(h.message_count for h in self.hops)

    def hop_records(self) -> list[dict]:
        """One structured record per hop."""
        return [
            {
                "tx_id": self.tx_id,
                "hop": h.hop,
                "chain": h.chain,
                "logical_time": h.tick,
                "message_count": h.message_count,
                "status": h.status,
            }
            for h in self.hops
        ]


def route_transaction(tx: Transaction, world) -> DeliveryReport:
    """Submit `tx` on its source chain and drive the world until the routing
    pipeline resolves; returns the delivery report for it."""
    accepted = world.inject_transaction(tx)
    world.run()
    return world.reports[accepted.tx_id]
