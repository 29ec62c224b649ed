import hashlib
import json
import random
from dataclasses import replace

import pytest

from conftest import build_random_chain, mutate_block_somewhere
from forensicross.chain import (
    Chain,
    EMPTY_BLOCK_MARKER,
    PayloadKind,
    SubmitError,
    Transaction,
    UnauthorizedValidator,
    dump_chain,
    make_transaction,
    validate_chain,
)
from forensicross.crypto import KeyPair, ZERO_DIGEST
from oracles import recursive_merkle_root


def fresh_chain(n_validators: int = 3) -> tuple[Chain, list[KeyPair], KeyPair]:
    validators = [KeyPair.derive(f"v{i}") for i in range(n_validators)]
    user = KeyPair.derive("user")
    return Chain("A", [v.public_key for v in validators]), validators, user


def some_tx(user: KeyPair, body: bytes = b"payload", dests=("B",)) -> Transaction:
    return make_transaction(PayloadKind.CASE_CREATE, body, "A", list(dests), user)


def test_submit_accepts_wellformed_and_assigns_id():
    chain, _v, user = fresh_chain()
    accepted = chain.submit_transaction(some_tx(user))
    assert accepted.tx_id == "A:1"
    assert chain.pending_pool == [accepted]


def test_submit_rejects_resubmitted_id():
    chain, _v, user = fresh_chain()
    accepted = chain.submit_transaction(some_tx(user))
    with pytest.raises(SubmitError) as err:
        chain.submit_transaction(accepted)
    assert err.value.reason == "DuplicateTxId"


def test_submit_rejects_flipped_body_with_original_signature():
    chain, _v, user = fresh_chain()
    tx = some_tx(user, body=b"evidence")
    for i in range(len(tx.body)):
        for bit in range(8):
            body = bytearray(tx.body)
            body[i] ^= 1 << bit
            bad = replace(tx, body=bytes(body))
            with pytest.raises(SubmitError) as err:
                chain.submit_transaction(bad)
            assert err.value.reason == "InvalidSignature"


def test_submit_rejects_unknown_payload_kind():
    chain, _v, user = fresh_chain()
    tx = replace(some_tx(user), payload_kind="CaseCreate")  # raw string, not the enum
    with pytest.raises(SubmitError) as err:
        chain.submit_transaction(tx)
    assert err.value.reason == "UnknownPayloadKind"


def test_mine_drains_pool_and_links():
    chain, validators, user = fresh_chain()
    for i in range(3):
        chain.submit_transaction(some_tx(user, body=bytes([i])))
    block = chain.mine_block(validators[0])
    assert len(block.transactions) == 3
    assert block.prev_hash == ZERO_DIGEST
    assert chain.pending_pool == []
    # independent recomputation of the merkle root over tx digests
    assert block.tx_merkle_root == recursive_merkle_root(
        [tx.digest() for tx in block.transactions]
    )


def test_mine_rejects_non_authority():
    chain, _v, user = fresh_chain()
    chain.submit_transaction(some_tx(user))
    with pytest.raises(UnauthorizedValidator):
        chain.mine_block(KeyPair.derive("outsider"))


def test_second_block_prev_hash_recomputed_independently():
    chain, validators, user = fresh_chain()
    chain.submit_transaction(some_tx(user))
    first = chain.mine_block(validators[0])
    chain.submit_transaction(some_tx(user, body=b"second"))
    second = chain.mine_block(validators[1])
    # hand-rolled header layout: u64 height, framed prev/root, u64 ts, framed key
    def frame(b: bytes) -> bytes:
        return len(b).to_bytes(4, "big") + b

    header = (
        first.height.to_bytes(8, "big")
        + frame(first.prev_hash)
        + frame(first.tx_merkle_root)
        + first.timestamp.to_bytes(8, "big")
        + frame(first.validator_public_key)
    )
    assert second.prev_hash == hashlib.sha256(header).digest()


def test_empty_block_uses_empty_marker():
    chain, validators, _user = fresh_chain()
    block = chain.mine_block(validators[0])
    assert block.tx_merkle_root == EMPTY_BLOCK_MARKER
    assert validate_chain(chain) is None


def test_validate_ok_on_untampered_chain():
    chain, _validators = build_random_chain(random.Random(1), blocks=10)
    assert validate_chain(chain) is None


def test_validate_localizes_mutated_tx():
    rng = random.Random(2)
    chain, _validators = build_random_chain(rng, blocks=10)
    target = next(h for h in range(4, 10) if chain.blocks[h].transactions)
    block = chain.blocks[target]
    txs = list(block.transactions)
    txs[0] = replace(txs[0], body=txs[0].body + b"!")
    chain.blocks[target] = replace(block, transactions=tuple(txs))
    fault = validate_chain(chain)
    assert fault is not None and fault.height == target


def test_validate_catches_signature_over_wrong_header():
    rng = random.Random(3)
    chain, validators = build_random_chain(rng, blocks=10)
    block = chain.blocks[7]
    # a different validator signs a *different* header: valid key, wrong content
    other = next(v for v in validators if v.public_key != block.validator_public_key)
    from forensicross.crypto import sign

    wrong_header = replace(block, timestamp=block.timestamp + 1).header_digest()
    forged = replace(
        block,
        validator_public_key=other.public_key,
        validator_signature=sign(wrong_header, other),
    )
    chain.blocks[7] = forged
    fault = validate_chain(chain)
    assert fault is not None and fault.height == 7


def test_mining_is_append_only():
    chain, validators, user = fresh_chain()
    chain.submit_transaction(some_tx(user))
    chain.mine_block(validators[0])
    digests_before = [b.header_digest() for b in chain.blocks]
    chain.submit_transaction(some_tx(user, body=b"later"))
    chain.mine_block(validators[1])
    assert [b.header_digest() for b in chain.blocks[:-1]] == digests_before


def test_tamper_sensitivity_sweep():
    rng = random.Random(4)
    chain, _validators = build_random_chain(rng, blocks=12)
    for _ in range(100):
        i = rng.randrange(len(chain.blocks))
        original = chain.blocks[i]
        mutated, what = mutate_block_somewhere(original, rng)
        chain.blocks[i] = mutated
        fault = validate_chain(chain)
        assert fault is not None, f"undetected mutation of {what} at {i}"
        assert fault.height <= i, f"{what}: reported {fault.height} > {i}"
        chain.blocks[i] = original
        assert validate_chain(chain) is None


def test_dump_chain_is_line_delimited_hex(tmp_path):
    chain, _validators = build_random_chain(random.Random(5), blocks=4)
    path = tmp_path / "chain.jsonl"
    dump_chain(chain, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    for line in lines:
        record = json.loads(line)
        assert set(record) >= {"height", "hash", "prev_hash", "tx_merkle_root"}
        bytes.fromhex(record["hash"])  # lowercase hex round-trips
        assert record["hash"] == record["hash"].lower()
