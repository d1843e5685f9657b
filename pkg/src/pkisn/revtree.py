"""Hierarchical Merkle forest mirroring the certificate-issuance hierarchy.

The forest is a tree of subtrees: the top subtree holds one leaf per root CA,
and each CA's leaf links to the subtree of its children. Every leaf commits
to the certificate's identity hash H(cert || reg_ts), to all of its logged
revocations with their registration timestamps, and to the root of its child
subtree. Leaves within a subtree are sorted by identity hash, which makes
lookups logarithmic and lets the log prove absence by exhibiting the two
adjacent leaves bracketing a missing hash.

One presence proof therefore authenticates a whole chain at once, including
every revocation attached to any of its members.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import cached_property

from .certs import CertChain
from .crypto import Digest, empty_subtree_root, hash_leaf
from .merkle import HashStore, root_from_audit_path
from .timetree import EntryKind, InclusionProof, TimeTreeEntry, verify_inclusion
from .wire import b64d, b64e, lp, u16, u64

ZERO32 = b"\x00" * 32


class RevTreeError(Exception):
    pass


class OrphanCertificate(RevTreeError):
    pass


class NotFoundAtLevel(RevTreeError):
    def __init__(self, level: int, message: str = ""):
        super().__init__(message or f"no matching leaf at level {level}")
        self.level = level


class ActuallyPresent(RevTreeError):
    pass


@dataclass
class RegisteredCert:
    """Registry view of one logged certificate, as the forest consumes it."""

    cert_bytes: bytes
    reg_ts: int
    parent: Digest | None
    revocations: list[tuple[bytes, int]] = field(default_factory=list)
    not_after: int = 0
    _id_hash: Digest | None = field(default=None, repr=False, compare=False)

    @property
    def id_hash(self) -> Digest:
        # cert_bytes and reg_ts never change after registration.
        if self._id_hash is None:
            self._id_hash = cert_id_hash(self.cert_bytes, self.reg_ts)
        return self._id_hash


def cert_id_hash(cert_bytes: bytes, reg_ts: int) -> Digest:
    """Identity of a logged certificate: hash of its bytes and registration time."""
    return hash_leaf(cert_bytes + u64(reg_ts))


def rev_leaf_hash(
    id_hash: Digest,
    revocations: tuple[tuple[bytes, int], ...],
    child_root: Digest | None,
) -> Digest:
    """Hash of one forest leaf; commits to identity, revocations, and child subtree."""
    out = id_hash.value + u16(len(revocations))
    for rev_bytes, reg_ts in revocations:
        out += lp(rev_bytes) + u64(reg_ts)
    out += child_root.value if child_root is not None else ZERO32
    return hash_leaf(out)


@dataclass(frozen=True)
class SubtreeLeafRecord:
    """One proven leaf: full contents plus its audit path inside the subtree."""

    id_hash: Digest
    revocations: tuple[tuple[bytes, int], ...]
    child_root: Digest | None
    leaf_index: int
    subtree_size: int
    path: tuple[Digest, ...]

    @cached_property
    def leaf_hash(self) -> Digest:
        return rev_leaf_hash(self.id_hash, self.revocations, self.child_root)

    def subtree_root(self) -> Digest | None:
        return root_from_audit_path(
            self.leaf_hash, self.leaf_index, self.subtree_size, list(self.path)
        )

    def to_json(self) -> dict:
        return {
            "id_hash": self.id_hash.hex,
            "revocations": [{"bytes": b64e(rb), "reg_ts": ts} for rb, ts in self.revocations],
            "child_root": self.child_root.hex if self.child_root else None,
            "leaf_index": self.leaf_index,
            "subtree_size": self.subtree_size,
            "path": [d.hex for d in self.path],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SubtreeLeafRecord":
        return cls(
            id_hash=Digest.from_hex(obj["id_hash"]),
            revocations=tuple((b64d(r["bytes"]), r["reg_ts"]) for r in obj["revocations"]),
            child_root=Digest.from_hex(obj["child_root"]) if obj["child_root"] else None,
            leaf_index=obj["leaf_index"],
            subtree_size=obj["subtree_size"],
            path=tuple(Digest.from_hex(h) for h in obj["path"]),
        )


@dataclass(frozen=True)
class ChainPresenceProof:
    """Per-level leaf records from the root-CA subtree down to the leaf, plus
    the chronological-tree inclusion proof of the current forest-root entry."""

    levels: tuple[SubtreeLeafRecord, ...]
    root_entry_proof: InclusionProof

    def to_json(self) -> dict:
        return {
            "levels": [rec.to_json() for rec in self.levels],
            "root_entry_proof": self.root_entry_proof.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainPresenceProof":
        return cls(
            levels=tuple(SubtreeLeafRecord.from_json(r) for r in obj["levels"]),
            root_entry_proof=InclusionProof.from_json(obj["root_entry_proof"]),
        )


@dataclass(frozen=True)
class AbsenceProof:
    """Bracketing proof that an identity hash is not in some subtree.

    levels authenticates the ancestor path down to the subtree in question;
    empty=True covers subtrees with no leaves at all (for child subtrees this
    shows the parent leaf committed to no children).
    """

    levels: tuple[SubtreeLeafRecord, ...]
    missing: Digest
    empty: bool
    subtree_size: int
    left: SubtreeLeafRecord | None
    right: SubtreeLeafRecord | None
    root_entry_proof: InclusionProof

    def to_json(self) -> dict:
        return {
            "levels": [rec.to_json() for rec in self.levels],
            "missing": self.missing.hex,
            "empty": self.empty,
            "subtree_size": self.subtree_size,
            "left": self.left.to_json() if self.left else None,
            "right": self.right.to_json() if self.right else None,
            "root_entry_proof": self.root_entry_proof.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AbsenceProof":
        return cls(
            levels=tuple(SubtreeLeafRecord.from_json(r) for r in obj["levels"]),
            missing=Digest.from_hex(obj["missing"]),
            empty=obj["empty"],
            subtree_size=obj["subtree_size"],
            left=SubtreeLeafRecord.from_json(obj["left"]) if obj["left"] else None,
            right=SubtreeLeafRecord.from_json(obj["right"]) if obj["right"] else None,
            root_entry_proof=InclusionProof.from_json(obj["root_entry_proof"]),
        )


class _Subtree:
    """Built subtree: leaves sorted by identity hash with a hash store for paths."""

    def __init__(self, leaves: list, leaf_hashes: list[Digest]):
        # leaves: (id_hash, revocations, child_root, cert_hash), pre-sorted,
        # with leaf_hashes computed (or cache-reused) by the forest.
        self.leaves = leaves
        self.store = HashStore(leaf_hashes)
        self.index: dict[Digest, int] = {l[0]: k for k, l in enumerate(leaves)}

    @property
    def size(self) -> int:
        return len(self.leaves)

    @property
    def root(self) -> Digest:
        if not self.leaves:
            return empty_subtree_root()
        return self.store.root()

    def record(self, idx: int) -> SubtreeLeafRecord:
        id_hash, revocations, child_root, _ = self.leaves[idx]
        return SubtreeLeafRecord(
            id_hash=id_hash,
            revocations=tuple(revocations),
            child_root=child_root,
            leaf_index=idx,
            subtree_size=self.size,
            path=tuple(self.store.audit_path(idx)),
        )


class RevForest:
    """The forest as built for one update; query operations are read-only.

    rebuild() recomputes only the subtrees named in `dirty` (plus their
    ancestors, which the caller includes), reusing child roots that did not
    change; passing dirty=None rebuilds everything from scratch.
    """

    def __init__(self):
        self._subtrees: dict[Digest | None, _Subtree] = {}
        self._cert_of_id: dict[Digest, Digest] = {}
        # Leaf hashes survive across rebuilds while a certificate's
        # revocation count and child-subtree root are unchanged.
        self._leaf_hash_cache: dict[Digest, tuple[int, Digest | None, Digest]] = {}

    def rebuild(
        self,
        registry: dict[Digest, RegisteredCert],
        children: dict[Digest | None, list[Digest]],
        dirty: set[Digest | None] | None = None,
    ) -> Digest:
        if dirty is None:
            keys = [k for k, ch in children.items() if ch or k is None]
            self._subtrees = {}
            self._cert_of_id = {}
            self._leaf_hash_cache = {}
        else:
            keys = [k for k in dirty if k is None or children.get(k)]
        # Children before parents: deeper subtrees first.
        try:
            keys.sort(key=lambda k: self._depth(k, registry), reverse=True)
        except KeyError as e:
            raise OrphanCertificate(f"parent {e} is not registered") from e
        for key in keys:
            leaves = []
            for ch in children.get(key, []):
                if ch not in registry:
                    raise OrphanCertificate(f"child {ch.hex[:12]} is not registered")
                rec = registry[ch]
                child_subtree = self._subtrees.get(ch)
                child_root = child_subtree.root if child_subtree is not None and child_subtree.size else None
                id_hash = rec.id_hash
                leaves.append((id_hash, rec.revocations, child_root, ch))
                self._cert_of_id[id_hash] = ch
            leaves.sort(key=lambda l: l[0].value)
            leaf_hashes = []
            for id_hash, revs, child_root, ch in leaves:
                hit = self._leaf_hash_cache.get(ch)
                if hit is not None and hit[0] == len(revs) and hit[1] == child_root:
                    leaf_hashes.append(hit[2])
                else:
                    lh = rev_leaf_hash(id_hash, tuple(revs), child_root)
                    self._leaf_hash_cache[ch] = (len(revs), child_root, lh)
                    leaf_hashes.append(lh)
            self._subtrees[key] = _Subtree(leaves, leaf_hashes)
        return self.top_root()

    @staticmethod
    def _depth(key: Digest | None, registry: dict[Digest, RegisteredCert]) -> int:
        depth = 0
        while key is not None:
            key = registry[key].parent
            depth += 1
        return depth

    def top_root(self) -> Digest:
        top = self._subtrees.get(None)
        if top is None or top.size == 0:
            return empty_subtree_root()
        return top.root

    def cert_hash_of(self, id_hash: Digest) -> Digest | None:
        return self._cert_of_id.get(id_hash)

    def prove_chain(self, query: list[Digest]) -> list[SubtreeLeafRecord]:
        """Locate each queried identity hash level by level, root CA first."""
        records: list[SubtreeLeafRecord] = []
        key: Digest | None = None
        for level, qh in enumerate(query):
            subtree = self._subtrees.get(key)
            if subtree is None or qh not in subtree.index:
                raise NotFoundAtLevel(level)
            idx = subtree.index[qh]
            records.append(subtree.record(idx))
            key = self._cert_of_id[qh]
        return records

    def prove_absence_records(
        self, level_path: list[Digest], missing: Digest
    ) -> tuple[list[SubtreeLeafRecord], bool, int, SubtreeLeafRecord | None, SubtreeLeafRecord | None]:
        """Ancestor records plus brackets for a missing hash; the log wraps this
        with the chronological-tree binding."""
        ancestors = self.prove_chain(level_path) if level_path else []
        key: Digest | None = self._cert_of_id[level_path[-1]] if level_path else None
        subtree = self._subtrees.get(key)
        if subtree is None or subtree.size == 0:
            return ancestors, True, 0, None, None
        if missing in subtree.index:
            raise ActuallyPresent(f"{missing.hex[:12]} is present")
        ids = [l[0] for l in subtree.leaves]
        pos = bisect.bisect_left(ids, missing)
        left = subtree.record(pos - 1) if pos > 0 else None
        right = subtree.record(pos) if pos < subtree.size else None
        return ancestors, False, subtree.size, left, right


def _chain_levels_root(levels: tuple[SubtreeLeafRecord, ...]) -> Digest | None:
    """Verify hierarchical chaining and return the implied top-subtree root."""
    top_root: Digest | None = None
    for k, rec in enumerate(levels):
        computed = rec.subtree_root()
        if computed is None:
            return None
        if k == 0:
            top_root = computed
        elif levels[k - 1].child_root != computed:
            return None
    return top_root


def _root_entry_binds(top_root: Digest, proof: InclusionProof, signed_root) -> bool:
    entry = TimeTreeEntry(EntryKind.REV_TREE_ROOT, top_root.value, signed_root.timestamp)
    return verify_inclusion(entry.encode(), proof, signed_root.root)


def verify_chain(
    chain: CertChain,
    cc_timestamps: list[int],
    proof: ChainPresenceProof,
    signed_root,
) -> bool:
    """Check a presence proof against a chain, its commitment timestamps
    (leaf first, as committed), and a signed root."""
    if len(proof.levels) != len(chain.certs) or len(cc_timestamps) != len(chain.certs):
        return False
    ts_root_first = list(reversed(cc_timestamps))
    for k, rec in enumerate(proof.levels):
        expected = cert_id_hash(chain.certs[k].canonical_bytes, ts_root_first[k])
        if rec.id_hash != expected:
            return False
    top_root = _chain_levels_root(proof.levels)
    if top_root is None:
        return False
    return _root_entry_binds(top_root, proof.root_entry_proof, signed_root)


def verify_absence(
    level_path: list[Digest],
    missing: Digest,
    proof: AbsenceProof,
    signed_root,
) -> bool:
    """Check a bracketing absence proof against a signed root."""
    if proof.missing != missing or len(proof.levels) != len(level_path):
        return False
    for rec, expected in zip(proof.levels, level_path):
        if rec.id_hash != expected:
            return False
    top_root = _chain_levels_root(proof.levels) if proof.levels else None
    if proof.levels and top_root is None:
        return False

    if proof.empty:
        if proof.left or proof.right or proof.subtree_size != 0:
            return False
        if proof.levels:
            if proof.levels[-1].child_root is not None:
                return False
        else:
            top_root = empty_subtree_root()
    else:
        brackets = [b for b in (proof.left, proof.right) if b is not None]
        if not brackets:
            return False
        roots = set()
        for b in brackets:
            if b.subtree_size != proof.subtree_size:
                return False
            r = b.subtree_root()
            if r is None:
                return False
            roots.add(r)
        if len(roots) != 1:
            return False
        subtree_root = roots.pop()
        if proof.left is not None and not proof.left.id_hash < missing:
            return False
        if proof.right is not None and not missing < proof.right.id_hash:
            return False
        if proof.left is not None and proof.right is not None:
            if proof.right.leaf_index != proof.left.leaf_index + 1:
                return False
        if proof.left is None and (proof.right is None or proof.right.leaf_index != 0):
            return False
        if proof.right is None and proof.left.leaf_index != proof.subtree_size - 1:
            return False
        if proof.levels:
            if proof.levels[-1].child_root != subtree_root:
                return False
        else:
            top_root = subtree_root

    assert top_root is not None
    return _root_entry_binds(top_root, proof.root_entry_proof, signed_root)
