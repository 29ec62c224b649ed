"""Typed transaction bodies, one per payload kind.

Each payload serializes field-by-field with the canonical encoding so the
same bytes decode on every chain. Stage-progress control traffic shares
the StageProposal kind and is distinguished by `phase`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .canonical import (
    Reader,
    enc_bytes,
    enc_bytes_list,
    enc_int,
    enc_str,
    enc_str_list,
)
from .chain import PayloadKind

PHASE_OPEN = "open"
PHASE_ADVANCED = "advanced"
PHASE_BLOCKED = "blocked"

VOTE_APPROVE = "approve"
VOTE_REJECT = "reject"


@dataclass(frozen=True)
class CaseCreatePayload:
    case_number: str

    def canonical_bytes(self) -> bytes:
        return enc_str(self.case_number)

    @classmethod
    def from_canonical(cls, data: bytes) -> "CaseCreatePayload":
        r = Reader(data)
        out = cls(r.read_str())
        r.expect_end()
        return out


@dataclass(frozen=True)
class AccessControlPayload:
    case_number: str
    policy_bytes: bytes  # canonical AccessPolicy serialization

    def canonical_bytes(self) -> bytes:
        return enc_str(self.case_number) + enc_bytes(self.policy_bytes)

    @classmethod
    def from_canonical(cls, data: bytes) -> "AccessControlPayload":
        r = Reader(data)
        out = cls(r.read_str(), r.read_bytes())
        r.expect_end()
        return out


@dataclass(frozen=True)
class QueryNodeAssignPayload:
    case_number: str
    public_keys: tuple[bytes, ...]

    def canonical_bytes(self) -> bytes:
        return enc_str(self.case_number) + enc_bytes_list(self.public_keys)

    @classmethod
    def from_canonical(cls, data: bytes) -> "QueryNodeAssignPayload":
        r = Reader(data)
        out = cls(r.read_str(), tuple(r.read_bytes_list()))
        r.expect_end()
        return out


@dataclass(frozen=True)
class StageProposalPayload:
    case_number: str
    stage: int
    round: int
    phase: str = PHASE_OPEN
    reasons: tuple[str, ...] = field(default_factory=tuple)

    def canonical_bytes(self) -> bytes:
        return (
            enc_str(self.case_number)
            + enc_int(self.stage)
            + enc_int(self.round)
            + enc_str(self.phase)
            + enc_str_list(self.reasons)
        )

    @classmethod
    def from_canonical(cls, data: bytes) -> "StageProposalPayload":
        r = Reader(data)
        out = cls(
            r.read_str(), r.read_int(), r.read_int(), r.read_str(), tuple(r.read_str_list())
        )
        r.expect_end()
        return out


@dataclass(frozen=True)
class StageVotePayload:
    case_number: str
    stage: int
    round: int
    vote: str
    reason: str = ""

    def canonical_bytes(self) -> bytes:
        return (
            enc_str(self.case_number)
            + enc_int(self.stage)
            + enc_int(self.round)
            + enc_str(self.vote)
            + enc_str(self.reason)
        )

    @classmethod
    def from_canonical(cls, data: bytes) -> "StageVotePayload":
        r = Reader(data)
        out = cls(r.read_str(), r.read_int(), r.read_int(), r.read_str(), r.read_str())
        r.expect_end()
        return out


@dataclass(frozen=True)
class DataAccessLogPayload:
    case_number: str
    actor_public_key: bytes
    role: str
    action: str
    stage: int
    decision: str  # "Allowed" | "Denied"
    payload_digest: bytes

    def canonical_bytes(self) -> bytes:
        return (
            enc_str(self.case_number)
            + enc_bytes(self.actor_public_key)
            + enc_str(self.role)
            + enc_str(self.action)
            + enc_int(self.stage)
            + enc_str(self.decision)
            + enc_bytes(self.payload_digest)
        )

    @classmethod
    def from_canonical(cls, data: bytes) -> "DataAccessLogPayload":
        r = Reader(data)
        out = cls(
            r.read_str(),
            r.read_bytes(),
            r.read_str(),
            r.read_str(),
            r.read_int(),
            r.read_str(),
            r.read_bytes(),
        )
        r.expect_end()
        return out


@dataclass(frozen=True)
class ProvenanceRequestPayload:
    case_number: str
    requester_public_key: bytes

    def canonical_bytes(self) -> bytes:
        return enc_str(self.case_number) + enc_bytes(self.requester_public_key)

    @classmethod
    def from_canonical(cls, data: bytes) -> "ProvenanceRequestPayload":
        r = Reader(data)
        out = cls(r.read_str(), r.read_bytes())
        r.expect_end()
        return out


_DECODERS = {
    PayloadKind.CASE_CREATE: CaseCreatePayload,
    PayloadKind.ACCESS_CONTROL: AccessControlPayload,
    PayloadKind.QUERY_NODE_ASSIGN: QueryNodeAssignPayload,
    PayloadKind.STAGE_PROPOSAL: StageProposalPayload,
    PayloadKind.STAGE_VOTE: StageVotePayload,
    PayloadKind.DATA_ACCESS_LOG: DataAccessLogPayload,
    PayloadKind.PROVENANCE_REQUEST: ProvenanceRequestPayload,
}


def decode_payload(kind: PayloadKind, body: bytes):
    """Decode a transaction body into its typed payload."""
    try:
        decoder = _DECODERS[kind]
    except KeyError:
        raise ValueError(f"no payload decoder for {kind}") from None
    return decoder.from_canonical(body)
