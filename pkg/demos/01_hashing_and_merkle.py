"""Digests, signatures, and the per-case Merkle construction.

Every piece of case history reduces to a 32-byte digest. A stage's leaf is
the nested hash of its ordered transaction digests; a chain's case root is
the Merkle root over the stage leaves. Change any transaction and the leaf,
and therefore the root, moves.
"""
from forensicross import (
    KeyPair,
    MerkleTree,
    case_chain_root,
    hash_bytes,
    merkle_root,
    sign,
    stage_leaf,
    verify,
)

print("= digests =")
print("sha256('') =", hash_bytes(b"").hex())
print("sha256('evidence') =", hash_bytes(b"evidence").hex())

print()
print("= signatures =")
key = KeyPair.derive("investigator-1")
signature = sign(b"upload disk image", key)
print("verify(correct message):", verify(b"upload disk image", signature, key.public_key))
print("verify(altered message):", verify(b"upload disk imagE", signature, key.public_key))

print()
print("= merkle trees =")
leaves = [hash_bytes(f"tx-{i}".encode()) for i in range(5)]
tree = MerkleTree(leaves)
print(f"5 leaves -> levels of width {[len(level) for level in tree.levels]}")
print("root:", tree.root.hex())
altered = list(leaves)
altered[2] = hash_bytes(b"tx-2-tampered")
print("root after changing leaf 2:", merkle_root(altered).hex())

print()
print("= stage leaves and the case root =")
stage_txs = {
    0: [hash_bytes(b"seize laptop"), hash_bytes(b"photograph scene")],
    1: [hash_bytes(b"image disk")],
    2: [hash_bytes(b"collect email"), hash_bytes(b"collect chat"), hash_bytes(b"collect logs")],
    3: [hash_bytes(b"run timeline analysis")],
    4: [hash_bytes(b"file final report")],
}
stage_leaves = [stage_leaf(stage_txs[s]) for s in range(5)]
for s, leaf in enumerate(stage_leaves):
    print(f"stage {s}: {len(stage_txs[s])} records -> leaf {leaf.hex()[:16]}…")
root = case_chain_root(stage_leaves, 5)
print("case root:", root.hex())

tampered = [stage_leaf(stage_txs[s]) for s in range(5)]
tampered[2] = stage_leaf(stage_txs[2][:2] + [hash_bytes(b"collect logs (edited)")])
print("case root after editing one stage-2 record:", case_chain_root(tampered, 5).hex())
print("stage-by-stage comparison pinpoints stage:",
      [s for s in range(5) if stage_leaves[s] != tampered[s]])
