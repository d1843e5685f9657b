"""Monitors: full log replicas and the minimized-tree lightweight variant.

A full monitor replays the entry stream, re-validates every certificate and
revocation, rebuilds the revocation forest per batch, and compares its own
computed roots against what the log signed. Any divergence yields a
misbehavior report built from signed artifacts.

A lightweight monitor never stores certificate bodies. It holds leaf hashes
for live entries, covering hashes for whole expired regions, and full bytes
only for revocation entries, maintained through delta updates. The minimized
node set still recomputes the exact tree root, so the monitor can vouch for
roots, extend its view, answer membership and revocation-status queries, and
verify client proofs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .certs import (
    CertChain,
    Certificate,
    SignerRole,
    decode_certificate,
    decode_revocation,
    verify_revocation,
)
from .crypto import TAG_CERT_ISSUE, Digest, hash_leaf, hash_node, verify
from .log import ChainCommitment, RevocationCommitment, SignedRoot, resolve_parent
from .merkle import largest_pow2_below
from .revtree import RegisteredCert, RevForest
from .timetree import EntryKind, TimeTree, TimeTreeEntry
from .wire import b64d, b64e


class MonitorError(Exception):
    pass


class UnknownTimestamp(MonitorError):
    pass


class GapInDelta(MonitorError):
    pass


class RootMismatch(MonitorError):
    def __init__(self, message: str, report: "MisbehaviorReport | None" = None):
        super().__init__(message)
        self.report = report


REPORT_INCORRECT_CC = "incorrect_cc"
REPORT_SUPPRESSED_REVOCATION = "suppressed_revocation"
REPORT_FORKED_ROOTS = "forked_roots"
REPORT_INVALID_ENTRY = "invalid_entry"
REPORT_ROOT_MISMATCH = "root_mismatch"


@dataclass(frozen=True)
class MisbehaviorReport:
    kind: str
    evidence: dict

    def to_json(self) -> dict:
        return {"kind": self.kind, "evidence": self.evidence}


def verify_fork_report(report: MisbehaviorReport, log_pub: bytes) -> bool:
    """A third party accepts a fork report iff both roots are validly signed
    for the same instant yet differ."""
    if report.kind != REPORT_FORKED_ROOTS:
        return False
    try:
        a = SignedRoot.from_json(report.evidence["root_a"])
        b = SignedRoot.from_json(report.evidence["root_b"])
    except (KeyError, ValueError):
        return False
    return (
        a.verify(log_pub)
        and b.verify(log_pub)
        and a.timestamp == b.timestamp
        and a.root != b.root
    )


@dataclass
class SyncResult:
    ok: bool
    new_size: int
    reports: list[MisbehaviorReport]


class FullMonitor:
    """Complete replica of the log with continuous re-validation."""

    def __init__(self, trust_roots: frozenset[Digest], log_pub: bytes, vendor_pub: bytes):
        self.trust_roots = trust_roots
        self.log_pub = log_pub
        self.vendor_pub = vendor_pub
        self.tree = TimeTree()
        self.forest = RevForest()
        self.registry: dict[Digest, RegisteredCert] = {}
        self.certs: dict[Digest, Certificate] = {}
        self.children: dict[Digest | None, list[Digest]] = {None: []}
        self.key_owner: dict[Digest, Digest] = {}
        self.rk_used: set[Digest] = set()
        self.entry_index: dict[Digest, int] = {}  # cert hash -> entry index
        self.rev_entry_hashes: set[Digest] = set()
        self.signed_roots: dict[int, SignedRoot] = {}
        self.last_update_time: int | None = None
        self._dirty: set[Digest | None] = set()

    # -- synchronization ----------------------------------------------------

    def sync_from(self, source) -> SyncResult:
        """Pull everything new from a log (or a client mirroring its API)."""
        signed_root = source.latest.signed_root if hasattr(source, "latest") else source.latest_signed_root()
        entries = source.get_entries(self.tree.size)
        return self.full_sync(entries, signed_root)

    def full_sync(self, new_entries: list[TimeTreeEntry], signed_root: SignedRoot) -> SyncResult:
        reports: list[MisbehaviorReport] = []
        if not signed_root.verify(self.log_pub):
            return SyncResult(False, self.tree.size, [
                MisbehaviorReport(REPORT_ROOT_MISMATCH, {"why": "unverifiable signed root",
                                                         "claimed": signed_root.to_json()})
            ])
        for entry in new_entries:
            problem = self._validate_entry(entry)
            if problem is not None:
                reports.append(problem)
            self.tree.append([entry])
            self._apply_entry(entry, self.tree.size - 1)
            if entry.kind == EntryKind.REV_TREE_ROOT:
                # Rebuild our own forest over everything seen so far and
                # compare with what the log claims it summarizes to.
                forest_root = self.forest.rebuild(
                    self.registry, self.children, dirty=self._dirty or None
                )
                self._dirty = set()
                if forest_root.value != entry.payload:
                    reports.append(
                        MisbehaviorReport(
                            REPORT_INVALID_ENTRY,
                            {
                                "entry": b64e(entry.encode()),
                                "why": "forest root does not match the logged objects",
                                "computed": forest_root.hex,
                            },
                        )
                    )
        if self.tree.root() != signed_root.root:
            reports.append(
                MisbehaviorReport(
                    REPORT_ROOT_MISMATCH,
                    {
                        "claimed": signed_root.to_json(),
                        "computed_root": self.tree.root().hex,
                        "tree_size": self.tree.size,
                    },
                )
            )
            return SyncResult(False, self.tree.size, reports)
        self.signed_roots[signed_root.timestamp] = signed_root
        self.last_update_time = signed_root.timestamp
        return SyncResult(not reports, self.tree.size, reports)

    def _validate_entry(self, entry: TimeTreeEntry) -> MisbehaviorReport | None:
        if entry.kind == EntryKind.CERT:
            try:
                cert = decode_certificate(entry.payload)
            except Exception as e:
                return self._invalid(entry, f"undecodable certificate: {e}")
            if cert.is_ca and cert.is_self_signed:
                if cert.cert_hash not in self.trust_roots:
                    return self._invalid(entry, "self-signed root outside the trust set")
                return None
            parent_hash = self.key_owner.get(cert.issuer_key_id)
            if parent_hash is None:
                return self._invalid(entry, "issuer key unknown to the log")
            parent = self.certs[parent_hash]
            if not parent.is_ca:
                return self._invalid(entry, "issuer is not a CA")
            if not verify(parent.subject_public_key, TAG_CERT_ISSUE, cert.tbs_bytes, cert.issuer_signature):
                return self._invalid(entry, "issuer signature does not verify")
            return None
        if entry.kind == EntryKind.REVOCATION:
            try:
                rev = decode_revocation(entry.payload)
            except Exception as e:
                return self._invalid(entry, f"undecodable revocation: {e}")
            target_hash = rev.target_cert_hash
            if target_hash not in self.certs:
                return self._invalid(entry, "revocation of an unlogged certificate")
            chain = self._chain_to(target_hash)
            if not verify_revocation(rev, self.certs[target_hash], chain, self.vendor_pub):
                return self._invalid(entry, "revocation fails verification")
            if rev.signer_role == SignerRole.REVOCATION_KEY:
                if target_hash in self.rk_used:
                    return self._invalid(entry, "second use of a single-use revocation key")
            return None
        if entry.kind == EntryKind.REV_TREE_ROOT:
            # Checked in _apply_entry where the rebuilt root is at hand.
            return None
        return None

    def _invalid(self, entry: TimeTreeEntry, why: str) -> MisbehaviorReport:
        return MisbehaviorReport(
            REPORT_INVALID_ENTRY,
            {"entry": b64e(entry.encode()), "why": why, "at_index": self.tree.size},
        )

    def _apply_entry(self, entry: TimeTreeEntry, index: int) -> None:
        if entry.kind == EntryKind.CERT:
            try:
                cert = decode_certificate(entry.payload)
            except Exception:
                return
            h = cert.cert_hash
            if h in self.registry:
                return
            try:
                parent = resolve_parent(cert, self.key_owner)
            except KeyError:
                parent = None  # invalid entry, already reported; keep running
            self.registry[h] = RegisteredCert(
                cert_bytes=entry.payload,
                reg_ts=entry.reg_timestamp,
                parent=parent,
                revocations=[],
                not_after=cert.not_after,
            )
            self.certs[h] = cert
            self.key_owner.setdefault(cert.subject_key_id, h)
            self.children.setdefault(h, [])
            self.children.setdefault(parent, []).append(h)
            self.entry_index[h] = index
            self._mark_dirty(parent)
        elif entry.kind == EntryKind.REVOCATION:
            self.rev_entry_hashes.add(hash_leaf(entry.payload))
            try:
                rev = decode_revocation(entry.payload)
            except Exception:
                return
            rec = self.registry.get(rev.target_cert_hash)
            if rec is None:
                return
            rec.revocations.append((entry.payload, entry.reg_timestamp))
            if rev.signer_role == SignerRole.REVOCATION_KEY:
                self.rk_used.add(rev.target_cert_hash)
            self._mark_dirty(rec.parent)

    def _mark_dirty(self, key: Digest | None) -> None:
        while True:
            self._dirty.add(key)
            if key is None:
                return
            key = self.registry[key].parent

    def _chain_to(self, cert_hash: Digest) -> CertChain:
        hashes = [cert_hash]
        while True:
            parent = self.registry[hashes[0]].parent
            if parent is None:
                break
            hashes.insert(0, parent)
        return CertChain(tuple(self.certs[h] for h in hashes))

    # -- checks serving clients ---------------------------------------------

    def check_root(self, client_root: SignedRoot):
        """Compare a root a client obtained during a handshake with our view."""
        if not client_root.verify(self.log_pub):
            raise MonitorError("presented root is not validly signed")
        ours = self.signed_roots.get(client_root.timestamp)
        if ours is None:
            raise UnknownTimestamp(f"no view of update at {client_root.timestamp}")
        if ours.root == client_root.root:
            return "consistent", None
        report = MisbehaviorReport(
            REPORT_FORKED_ROOTS,
            {"root_a": ours.to_json(), "root_b": client_root.to_json()},
        )
        return "fork", report

    def check_chain_commitment(self, cc: ChainCommitment, chain: CertChain) -> MisbehaviorReport | None:
        """Flag a commitment whose promised registration times the log broke."""
        if not cc.verify(self.log_pub):
            return None  # not the log's signature; nothing to report
        if self.last_update_time is None:
            return None
        ts_root_first = list(reversed(cc.timestamps))
        for cert, promised in zip(chain.certs, ts_root_first):
            if promised > self.last_update_time:
                continue  # still in the future; judge later
            rec = self.registry.get(cert.cert_hash)
            observed = rec.reg_ts if rec is not None else None
            if observed == promised:
                continue
            evidence = {
                "cc": cc.to_json(),
                "cert": b64e(cert.canonical_bytes),
                "promised_ts": promised,
                "observed_ts": observed,
                "signed_root": self.signed_roots[self.last_update_time].to_json(),
            }
            if rec is not None:
                idx = self.entry_index[cert.cert_hash]
                evidence["entry_inclusion"] = self.tree.inclusion_proof(idx).to_json()
                evidence["entry"] = b64e(self.tree.entry(idx).encode())
            return MisbehaviorReport(REPORT_INCORRECT_CC, evidence)
        return None

    def check_revocation_commitment(self, rc: RevocationCommitment) -> MisbehaviorReport | None:
        """Flag a revocation the log promised but never appended."""
        if not rc.verify(self.log_pub):
            return None
        if self.last_update_time is None or rc.timestamp > self.last_update_time:
            return None
        if rc.rev_hash in self.rev_entry_hashes:
            return None
        return MisbehaviorReport(
            REPORT_SUPPRESSED_REVOCATION,
            {
                "commitment": rc.to_json(),
                "synced_through": self.last_update_time,
                "signed_root": self.signed_roots[self.last_update_time].to_json(),
            },
        )


# ---------------------------------------------------------------------------
# Lightweight monitoring
# ---------------------------------------------------------------------------

ITEM_COVER = "cover"
ITEM_HASH = "hash"
ITEM_FULL = "full"


@dataclass(frozen=True)
class DeltaItem:
    kind: str
    level: int
    index: int
    payload: bytes  # 32-byte digest for cover/hash, full entry bytes for full

    def span(self) -> tuple[int, int]:
        lo = self.index << self.level
        return lo, lo + (1 << self.level)

    def to_json(self) -> dict:
        return {"kind": self.kind, "level": self.level, "index": self.index, "payload": b64e(self.payload)}

    @classmethod
    def from_json(cls, obj: dict) -> "DeltaItem":
        return cls(obj["kind"], obj["level"], obj["index"], b64d(obj["payload"]))


@dataclass(frozen=True)
class DeltaBatch:
    ts: int
    items: tuple[DeltaItem, ...]

    def to_json(self) -> dict:
        return {"ts": self.ts, "items": [i.to_json() for i in self.items]}

    @classmethod
    def from_json(cls, obj: dict) -> "DeltaBatch":
        return cls(obj["ts"], tuple(DeltaItem.from_json(i) for i in obj["items"]))


@dataclass(frozen=True)
class DeltaUpdate:
    from_size: int
    to_size: int
    batches: tuple[DeltaBatch, ...]
    signed_root: SignedRoot

    def to_json(self) -> dict:
        return {
            "from_size": self.from_size,
            "to_size": self.to_size,
            "batches": [b.to_json() for b in self.batches],
            "signed_root": self.signed_root.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DeltaUpdate":
        return cls(
            from_size=obj["from_size"],
            to_size=obj["to_size"],
            batches=tuple(DeltaBatch.from_json(b) for b in obj["batches"]),
            signed_root=SignedRoot.from_json(obj["signed_root"]),
        )


def build_delta(log, from_size: int, now: int, grace: int | None = None) -> DeltaUpdate:
    """Log-side construction of the next delta for a lightweight monitor.

    Certificates expired (with one scheduling period of grace) and carrying no
    live descendants are declared prunable; maximal complete subtrees of
    prunable entries collapse to one covering hash each. Revocation entries
    always travel in full; forest-root and bundle entries stay as single leaf
    hashes. The monitor verifies the declaration only through root equality,
    so a mislabeled leaf can cost availability but never integrity.
    """
    grace = log.config.scheduling_period if grace is None else grace
    to_size = log.tree.size
    entries = log.get_entries(from_size, to_size)

    live_memo: dict[Digest, bool] = {}

    def subtree_live(h: Digest) -> bool:
        if h in live_memo:
            return live_memo[h]
        rec = log.registry[h]
        alive = rec.not_after + grace > now or any(
            subtree_live(ch) for ch in log.children.get(h, [])
        )
        live_memo[h] = alive
        return alive

    def prunable(entry: TimeTreeEntry) -> bool:
        if entry.kind != EntryKind.CERT:
            return False
        h = hash_leaf(entry.payload)
        if h not in log.registry:
            return False
        return not subtree_live(h)

    batches: list[DeltaBatch] = []
    i = 0
    while i < len(entries):
        ts = entries[i].reg_timestamp
        j = i
        while j < len(entries) and entries[j].reg_timestamp == ts:
            j += 1
        items: list[DeltaItem] = []
        k = i
        while k < j:
            entry = entries[k]
            abs_idx = from_size + k
            if prunable(entry):
                run_end = k
                while run_end < j and prunable(entries[run_end]):
                    run_end += 1
                items.extend(_cover_run(log.tree, from_size + k, from_size + run_end))
                k = run_end
                continue
            if entry.kind == EntryKind.REVOCATION:
                items.append(DeltaItem(ITEM_FULL, 0, abs_idx, entry.encode()))
            else:
                items.append(DeltaItem(ITEM_HASH, 0, abs_idx, entry.leaf_hash.value))
            k += 1
        batches.append(DeltaBatch(ts=ts, items=tuple(items)))
        i = j
    return DeltaUpdate(
        from_size=from_size,
        to_size=to_size,
        batches=tuple(batches),
        signed_root=log.latest.signed_root,
    )


def _cover_run(tree: TimeTree, lo: int, hi: int) -> list[DeltaItem]:
    """Greedy dyadic tiling of [lo, hi) with maximal aligned subtrees."""
    items = []
    a = lo
    while a < hi:
        level = 0
        while (
            a % (2 << level) == 0
            and a + (2 << level) <= hi
        ):
            level += 1
        width = 1 << level
        if level == 0:
            items.append(DeltaItem(ITEM_HASH, 0, a, tree.leaf_hash(a).value))
        else:
            items.append(DeltaItem(ITEM_COVER, level, a >> level, tree.node_hash(level, a >> level).value))
        a += width
    return items


@dataclass
class _Tile:
    level: int
    index: int
    digest: Digest

    def span(self) -> tuple[int, int]:
        lo = self.index << self.level
        return lo, lo + (1 << self.level)


class MinimizedTimeTree:
    """The lightweight monitor's state: a tiling of the leaf range by tree
    nodes, plus full revocation payloads for status queries."""

    def __init__(self, log_pub: bytes):
        self.log_pub = log_pub
        self.tiles: list[_Tile] = []
        self.size = 0
        self.full_entries: dict[int, TimeTreeEntry] = {}
        self.leaf_index: dict[Digest, int] = {}  # retained leaf hash -> position
        self.revs_by_target: dict[Digest, list[tuple[bytes, int]]] = {}
        self.signed_roots: dict[int, SignedRoot] = {}
        self.latest_root: SignedRoot | None = None

    def root(self) -> Digest:
        if self.size == 0:
            raise MonitorError("empty state has no root")
        cursor = 0
        tiles = self.tiles

        def rec(lo: int, hi: int) -> Digest:
            nonlocal cursor
            tile = tiles[cursor]
            t_lo, t_hi = tile.span()
            if t_lo == lo and t_hi == hi:
                cursor += 1
                return tile.digest
            k = largest_pow2_below(hi - lo)
            left = rec(lo, lo + k)
            right = rec(lo + k, hi)
            return hash_node(left, right)

        out = rec(0, self.size)
        if cursor != len(tiles):
            raise MonitorError("tiling does not cover the leaf range")
        return out

    def apply_delta(self, delta: DeltaUpdate) -> None:
        """Extend the minimized view; commits only if the recomputed root
        matches the signed root carried by the delta."""
        if delta.from_size != self.size:
            raise GapInDelta(f"state at {self.size}, delta starts at {delta.from_size}")
        if not delta.signed_root.verify(self.log_pub):
            raise RootMismatch("delta carries an unverifiable signed root")
        new_tiles: list[_Tile] = []
        new_full: dict[int, TimeTreeEntry] = {}
        pos = self.size
        for batch in delta.batches:
            for item in batch.items:
                lo, hi = item.span()
                if lo != pos:
                    raise GapInDelta(f"item at {lo}, expected {pos}")
                if item.kind == ITEM_FULL:
                    entry = TimeTreeEntry.decode(item.payload)
                    new_tiles.append(_Tile(0, item.index, entry.leaf_hash))
                    new_full[item.index] = entry
                elif item.kind in (ITEM_HASH, ITEM_COVER):
                    new_tiles.append(_Tile(item.level, item.index, Digest(item.payload)))
                else:
                    raise MonitorError(f"unknown delta item kind {item.kind!r}")
                pos = hi
        if pos != delta.to_size:
            raise GapInDelta(f"delta items end at {pos}, declared {delta.to_size}")

        candidate = MinimizedTimeTree(self.log_pub)
        candidate.tiles = self.tiles + new_tiles
        candidate.size = delta.to_size
        computed = candidate.root()
        if computed != delta.signed_root.root:
            raise RootMismatch(
                f"recomputed root {computed.hex[:12]} != signed {delta.signed_root.root.hex[:12]}",
                MisbehaviorReport(
                    REPORT_ROOT_MISMATCH,
                    {"claimed": delta.signed_root.to_json(), "computed_root": computed.hex},
                ),
            )
        self.tiles = candidate.tiles
        self.size = delta.to_size
        for idx, entry in new_full.items():
            self.full_entries[idx] = entry
            try:
                rev = decode_revocation(entry.payload)
            except Exception:
                continue
            self.revs_by_target.setdefault(rev.target_cert_hash, []).append(
                (entry.payload, entry.reg_timestamp)
            )
        for tile in new_tiles:
            if tile.level == 0:
                self.leaf_index[tile.digest] = tile.index
        self.signed_roots[delta.signed_root.timestamp] = delta.signed_root
        self.latest_root = delta.signed_root

    # -- queries -------------------------------------------------------------

    def has_entry(self, entry_bytes: bytes) -> bool:
        """Membership of a retained (non-pruned) entry."""
        return hash_leaf(entry_bytes) in self.leaf_index

    def revocations_for(self, cert_hash: Digest) -> list[tuple[bytes, int]]:
        return list(self.revs_by_target.get(cert_hash, []))

    def vouch_root(self, signed_root: SignedRoot) -> bool:
        ours = self.signed_roots.get(signed_root.timestamp)
        return ours is not None and ours.root == signed_root.root

    def verify_client_proof(self, chain, cc_timestamps, proof, signed_root) -> bool:
        """A client's presence proof checks out iff the root it hangs from is
        one we computed ourselves and the proof verifies against it."""
        from .revtree import verify_chain

        if not self.vouch_root(signed_root):
            return False
        return verify_chain(chain, cc_timestamps, proof, signed_root)

    def storage_bytes(self) -> int:
        total = 0
        for tile in self.tiles:
            lo, _ = tile.span()
            if tile.level == 0 and lo in self.full_entries:
                total += len(self.full_entries[lo].encode())
            else:
                total += 32
        return total


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def save_full_monitor(state_dir: Path, monitor: FullMonitor) -> None:
    state_dir = Path(state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    with open(state_dir / "entries.bin", "wb") as f:
        for i in range(monitor.tree.size):
            raw = monitor.tree.entry(i).encode()
            f.write(len(raw).to_bytes(4, "big") + raw)
    roots = {str(ts): sr.to_json() for ts, sr in monitor.signed_roots.items()}
    (state_dir / "roots.json").write_text(json.dumps(roots) + "\n")


def load_full_monitor(
    state_dir: Path,
    trust_roots: frozenset[Digest],
    log_pub: bytes,
    vendor_pub: bytes,
) -> FullMonitor:
    """Rebuild a replica from disk, re-running the full verification pass."""
    state_dir = Path(state_dir)
    monitor = FullMonitor(trust_roots, log_pub, vendor_pub)
    roots = {
        int(k): SignedRoot.from_json(v)
        for k, v in json.loads((state_dir / "roots.json").read_text()).items()
    }
    data = (state_dir / "entries.bin").read_bytes()
    off = 0
    entries: list[TimeTreeEntry] = []
    while off + 4 <= len(data):
        length = int.from_bytes(data[off : off + 4], "big")
        entries.append(TimeTreeEntry.decode(data[off + 4 : off + 4 + length]))
        off += 4 + length
    if entries:
        latest = roots[max(roots)]
        monitor.full_sync(entries, latest)
        if monitor.tree.root() != latest.root:
            raise MonitorError("stored replica does not recompute its signed root")
        monitor.signed_roots.update(roots)
    return monitor


def save_minimized(path: Path, state: MinimizedTimeTree) -> None:
    payload = {
        "size": state.size,
        "tiles": [
            {"level": t.level, "index": t.index, "digest": t.digest.hex} for t in state.tiles
        ],
        "full": [{"index": i, "b64": b64e(e.encode())} for i, e in sorted(state.full_entries.items())],
        "roots": [sr.to_json() for _, sr in sorted(state.signed_roots.items())],
    }
    Path(path).write_text(json.dumps(payload) + "\n")


def load_minimized(path: Path, log_pub: bytes) -> MinimizedTimeTree:
    obj = json.loads(Path(path).read_text())
    state = MinimizedTimeTree(log_pub)
    state.size = obj["size"]
    state.tiles = [_Tile(t["level"], t["index"], Digest.from_hex(t["digest"])) for t in obj["tiles"]]
    for f in obj["full"]:
        entry = TimeTreeEntry.decode(b64d(f["b64"]))
        state.full_entries[f["index"]] = entry
        try:
            rev = decode_revocation(entry.payload)
        except Exception:
            continue
        state.revs_by_target.setdefault(rev.target_cert_hash, []).append(
            (entry.payload, entry.reg_timestamp)
        )
    for tile in state.tiles:
        if tile.level == 0:
            state.leaf_index[tile.digest] = tile.index
    for r in obj["roots"]:
        sr = SignedRoot.from_json(r)
        state.signed_roots[sr.timestamp] = sr
        state.latest_root = sr
    if state.size and state.latest_root is not None:
        if state.root() != state.latest_root.root:
            raise RootMismatch("stored state does not recompute its signed root")
    return state
