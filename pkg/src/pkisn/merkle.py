"""Merkle math over sequences of leaf hashes.

Trees follow the standard transparency-log shape: a tree over n > 1 leaves
splits at the largest power of two strictly less than n. Audit paths,
consistency paths, and their verifiers all assume that shape, so any two
parties agree on the structure for every size.
"""

from __future__ import annotations

from .crypto import Digest, hash_node, sha256


def largest_pow2_below(n: int) -> int:
    """Largest power of two strictly less than n (n must be >= 2)."""
    if n < 2:
        raise ValueError("need n >= 2")
    k = 1
    while k * 2 < n:
        k *= 2
    return k


class HashStore:
    """Leaf-hash list with memoized roots of perfect aligned subranges.

    Appending never invalidates a memoized node; ragged ranges on the right
    edge are recomputed on demand in O(log n) once the aligned parts are
    cached.
    """

    def __init__(self, leaf_hashes: list[Digest] | None = None):
        self.leaves: list[Digest] = list(leaf_hashes or [])
        self._memo: dict[tuple[int, int], Digest] = {}

    def __len__(self) -> int:
        return len(self.leaves)

    def append(self, leaf_hash: Digest) -> None:
        self.leaves.append(leaf_hash)

    def range_hash(self, lo: int, hi: int) -> Digest:
        """Root of the subtree over leaves [lo, hi)."""
        n = hi - lo
        if n <= 0 or hi > len(self.leaves):
            raise ValueError(f"bad range [{lo}, {hi}) over {len(self.leaves)} leaves")
        if n == 1:
            return self.leaves[lo]
        aligned = (n & (n - 1)) == 0 and lo % n == 0
        if aligned:
            hit = self._memo.get((lo, hi))
            if hit is not None:
                return hit
        k = largest_pow2_below(n)
        out = hash_node(self.range_hash(lo, lo + k), self.range_hash(lo + k, hi))
        if aligned:
            self._memo[(lo, hi)] = out
        return out

    def root(self, size: int | None = None) -> Digest:
        size = len(self.leaves) if size is None else size
        if size == 0:
            return sha256(b"")
        return self.range_hash(0, size)

    def audit_path(self, index: int, size: int | None = None) -> list[Digest]:
        """Sibling hashes from the leaf up to the root of the size-prefix tree."""
        size = len(self.leaves) if size is None else size
        if not 0 <= index < size <= len(self.leaves):
            raise ValueError("index outside tree")
        path: list[Digest] = []
        lo, hi = 0, size
        stack: list[Digest] = []
        while hi - lo > 1:
            k = largest_pow2_below(hi - lo)
            if index < lo + k:
                stack.append(self.range_hash(lo + k, hi))
                hi = lo + k
            else:
                stack.append(self.range_hash(lo, lo + k))
                lo = lo + k
        path = list(reversed(stack))
        return path

    def consistency_path(self, old_size: int, new_size: int) -> list[Digest]:
        """Nodes proving the old_size tree is a prefix of the new_size tree."""
        if not 0 < old_size <= new_size <= len(self.leaves):
            raise ValueError("sizes outside tree")
        if old_size == new_size:
            return []
        return self._sub_consistency(old_size, 0, new_size, True)

    def _sub_consistency(self, m: int, lo: int, hi: int, complete: bool) -> list[Digest]:
        n = hi - lo
        if m == n:
            return [] if complete else [self.range_hash(lo, hi)]
        k = largest_pow2_below(n)
        if m <= k:
            out = self._sub_consistency(m, lo, lo + k, complete)
            out.append(self.range_hash(lo + k, hi))
        else:
            out = self._sub_consistency(m - k, lo + k, hi, False)
            out.append(self.range_hash(lo, lo + k))
        return out


def root_from_audit_path(
    leaf_hash: Digest, index: int, size: int, path: list[Digest]
) -> Digest | None:
    """Recompute the root implied by an audit path; None if the path is malformed."""
    if size <= 0 or not 0 <= index < size:
        return None
    fn, sn = index, size - 1
    r = leaf_hash
    for node in path:
        if sn == 0:
            return None
        if fn & 1 or fn == sn:
            r = hash_node(node, r)
            if not fn & 1:
                while True:
                    fn >>= 1
                    sn >>= 1
                    if fn & 1 or fn == 0:
                        break
        else:
            r = hash_node(r, node)
        fn >>= 1
        sn >>= 1
    if sn != 0:
        return None
    return r


def verify_consistency_path(
    old_size: int,
    new_size: int,
    old_root: Digest,
    new_root: Digest,
    path: list[Digest],
) -> bool:
    """Check that the new tree is an append-only extension of the old one."""
    if old_size <= 0 or old_size > new_size:
        return False
    if old_size == new_size:
        return not path and old_root == new_root
    nodes = list(path)
    if old_size & (old_size - 1) == 0:
        # Exact power of two: the old root itself opens the path.
        nodes = [old_root] + nodes
    if not nodes:
        return False
    fn, sn = old_size - 1, new_size - 1
    while fn & 1:
        fn >>= 1
        sn >>= 1
    fr = sr = nodes[0]
    for node in nodes[1:]:
        if sn == 0:
            return False
        if fn & 1 or fn == sn:
            fr = hash_node(node, fr)
            sr = hash_node(node, sr)
            if not fn & 1:
                while True:
                    fn >>= 1
                    sn >>= 1
                    if fn & 1 or fn == 0:
                        break
        else:
            sr = hash_node(sr, node)
        fn >>= 1
        sn >>= 1
    return sn == 0 and fr == old_root and sr == new_root
