"""The log's state machine.

Submissions are verified and queued; a chain commitment signed immediately
promises the registration timestamp of every certificate in the chain. At
each scheduled update the queue is appended to the chronological tree, the
revocation forest is rebuilt, its root is appended as the batch's final
entry, and a fresh signed root is emitted. Readers always see the snapshot
of the last completed update.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import journal as jr
from .certs import (
    CertChain,
    Certificate,
    RevocationMessage,
    SignerRole,
    decode_certificate,
    decode_revocation,
    verify_revocation,
)
from .crypto import (
    TAG_CHAIN_COMMITMENT,
    TAG_REVOCATION_COMMITMENT,
    TAG_SIGNED_ROOT,
    TAG_TCRL,
    Digest,
    KeyPair,
    Signature,
    verify,
)
from .revtree import (
    AbsenceProof,
    ChainPresenceProof,
    NotFoundAtLevel,
    RegisteredCert,
    RevForest,
    SubtreeLeafRecord,
)
from .timetree import EntryKind, TimeTree, TimeTreeEntry, ConsistencyProof
from .wire import Reader, b64d, b64e, u8, u64


class LogError(Exception):
    pass


class InvalidChainSubmission(LogError):
    pass


class UntrustedRoot(LogError):
    pass


class QueueFull(LogError):
    pass


class TargetNotLogged(LogError):
    pass


class IllegitimateRevocation(LogError):
    pass


class DuplicateRkRevocation(LogError):
    """A CA's offline revocation key is single-use."""


class UpdateTooEarly(LogError):
    pass


class NoUpdateYet(LogError):
    pass


class BadVendorSignature(LogError):
    pass


class UnknownLeaf(LogError):
    """Raised by proof queries when a level is missing; carries the absence proof."""

    def __init__(self, level: int, absence: AbsenceProof, signed_root: "SignedRoot"):
        super().__init__(f"no leaf at level {level}")
        self.level = level
        self.absence = absence
        self.signed_root = signed_root


@dataclass(frozen=True)
class ChainCommitment:
    """Signed promise binding a leaf to the registration times of its chain.

    Timestamps run leaf to root and are always non-increasing in that order.
    """

    leaf_cert_hash: Digest
    timestamps: tuple[int, ...]
    log_signature: Signature

    def payload(self) -> bytes:
        out = self.leaf_cert_hash.value + u8(len(self.timestamps))
        for t in self.timestamps:
            out += u64(t)
        return out

    def verify(self, log_pub: bytes) -> bool:
        return verify(log_pub, TAG_CHAIN_COMMITMENT, self.payload(), self.log_signature)

    def to_json(self) -> dict:
        return {
            "leaf_cert_hash": self.leaf_cert_hash.hex,
            "timestamps": list(self.timestamps),
            "signature": b64e(self.log_signature.encode()),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChainCommitment":
        return cls(
            leaf_cert_hash=Digest.from_hex(obj["leaf_cert_hash"]),
            timestamps=tuple(obj["timestamps"]),
            log_signature=Signature.read_from(Reader(b64d(obj["signature"]))),
        )


@dataclass(frozen=True)
class SignedRoot:
    root: Digest
    timestamp: int
    log_signature: Signature

    def payload(self) -> bytes:
        return self.root.value + u64(self.timestamp)

    def verify(self, log_pub: bytes) -> bool:
        return verify(log_pub, TAG_SIGNED_ROOT, self.payload(), self.log_signature)

    def to_json(self) -> dict:
        return {
            "root": self.root.hex,
            "timestamp": self.timestamp,
            "signature": b64e(self.log_signature.encode()),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SignedRoot":
        return cls(
            root=Digest.from_hex(obj["root"]),
            timestamp=obj["timestamp"],
            log_signature=Signature.read_from(Reader(b64d(obj["signature"]))),
        )


@dataclass(frozen=True)
class RevocationCommitment:
    rev_hash: Digest
    timestamp: int
    log_signature: Signature

    def payload(self) -> bytes:
        return self.rev_hash.value + u64(self.timestamp)

    def verify(self, log_pub: bytes) -> bool:
        return verify(log_pub, TAG_REVOCATION_COMMITMENT, self.payload(), self.log_signature)

    def verify_as_tcrl(self, log_pub: bytes) -> bool:
        # Bundle commitments share the shape but live under their own tag.
        return verify(log_pub, TAG_TCRL, self.payload(), self.log_signature)

    def to_json(self) -> dict:
        return {
            "rev_hash": self.rev_hash.hex,
            "timestamp": self.timestamp,
            "signature": b64e(self.log_signature.encode()),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RevocationCommitment":
        return cls(
            rev_hash=Digest.from_hex(obj["rev_hash"]),
            timestamp=obj["timestamp"],
            log_signature=Signature.read_from(Reader(b64d(obj["signature"]))),
        )


@dataclass(frozen=True)
class PendingRevocation:
    """A verified revocation awaiting the next update, with its commitment."""

    revocation: RevocationMessage
    commitment: RevocationCommitment

    def to_json(self) -> dict:
        return {
            "revocation": b64e(self.revocation.canonical_bytes),
            "commitment": self.commitment.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PendingRevocation":
        return cls(
            revocation=decode_revocation(b64d(obj["revocation"])),
            commitment=RevocationCommitment.from_json(obj["commitment"]),
        )


@dataclass
class LogConfig:
    scheduling_period: int
    trust_roots: frozenset[Digest]
    vendor_public_key: bytes
    max_pending: int = 100_000

    def __post_init__(self):
        if self.scheduling_period <= 0:
            raise ValueError("scheduling period must be positive")


@dataclass
class UpdateRecord:
    timestamp: int
    tree_size: int
    signed_root: SignedRoot
    forest_root: Digest
    root_entry_index: int


def resolve_parent(cert: Certificate, key_owner: dict[Digest, Digest]) -> Digest | None:
    """Forest placement rule: a self-signed CA is a root; anything else hangs
    under the first registered certificate holding its issuer key."""
    if cert.is_ca and cert.is_self_signed:
        return None
    return key_owner[cert.issuer_key_id]


class LogServer:
    """Single-writer log; submissions validate concurrently but mutate through
    one queue, and every read serves the snapshot of the latest update."""

    def __init__(
        self,
        config: LogConfig,
        signing_key: KeyPair,
        start_time: int,
        journal: jr.Journal | None = None,
    ):
        self.config = config
        self.key = signing_key
        self.tree = TimeTree()
        self.forest = RevForest()
        self.registry: dict[Digest, RegisteredCert] = {}
        self.certs: dict[Digest, Certificate] = {}
        self.children: dict[Digest | None, list[Digest]] = {None: []}
        # First registered certificate holding each subject key; fixes forest
        # placement deterministically from the entry stream alone, so monitors
        # reconstruct the identical hierarchy.
        self.key_owner: dict[Digest, Digest] = {}
        self.pending_certs: list[Digest] = []  # submission order, parents first
        self.pending_set: set[Digest] = set()
        self.pending_revs: list[RevocationMessage] = []
        self.pending_tcrls: list[Digest] = []
        self.rk_revocations: dict[Digest, Digest] = {}  # target cert -> rev hash
        self.updates: list[UpdateRecord] = []
        self.last_update_time = start_time
        self._dirty: set[Digest | None] = set()
        self._journal = journal

    # -- schedule ----------------------------------------------------------

    def next_update_time(self) -> int:
        return self.last_update_time + self.config.scheduling_period

    @property
    def latest(self) -> UpdateRecord:
        if not self.updates:
            raise NoUpdateYet("log has not produced an update yet")
        return self.updates[-1]

    # -- submissions -------------------------------------------------------

    def submit_chain(self, chain: CertChain) -> ChainCommitment:
        try:
            chain.verify_structure(require_leaf=True)
        except Exception as e:
            raise InvalidChainSubmission(str(e)) from e
        return self._admit_chain(chain)

    def _admit_chain(self, chain: CertChain, journal: bool = True) -> ChainCommitment:
        if chain.root.cert_hash not in self.config.trust_roots:
            raise UntrustedRoot("chain does not terminate at a trusted root")
        timestamps_root_first: list[int] = []
        new_count = sum(
            1
            for c in chain.certs
            if c.cert_hash not in self.registry and c.cert_hash not in self.pending_set
        )
        if len(self.pending_certs) + new_count > self.config.max_pending:
            raise QueueFull(f"more than {self.config.max_pending} entries pending")
        to_journal: list[tuple[int, bytes]] = []
        for cert in chain.certs:
            h = cert.cert_hash
            if h in self.registry:
                timestamps_root_first.append(self.registry[h].reg_ts)
            elif h in self.pending_set:
                timestamps_root_first.append(self.next_update_time())
            else:
                self.certs[h] = cert
                self.pending_certs.append(h)
                self.pending_set.add(h)
                timestamps_root_first.append(self.next_update_time())
                to_journal.append((jr.REC_CERT, cert.canonical_bytes))
        if journal and self._journal is not None and to_journal:
            self._journal.append_all(to_journal)
        ts_leaf_first = tuple(reversed(timestamps_root_first))
        payload = chain.leaf.cert_hash.value + u8(len(ts_leaf_first))
        for t in ts_leaf_first:
            payload += u64(t)
        sig = self.key.sign(TAG_CHAIN_COMMITMENT, payload)
        return ChainCommitment(
            leaf_cert_hash=chain.leaf.cert_hash,
            timestamps=ts_leaf_first,
            log_signature=sig,
        )

    def submit_revocation(self, chain: CertChain, rev: RevocationMessage) -> RevocationCommitment:
        try:
            chain.verify_structure(require_leaf=False)
        except Exception as e:
            raise InvalidChainSubmission(str(e)) from e
        target = chain.certs[-1]
        if rev.target_cert_hash != target.cert_hash:
            raise IllegitimateRevocation("revocation does not target the chain's last certificate")
        h = target.cert_hash
        if h not in self.registry and h not in self.pending_set:
            raise TargetNotLogged("target certificate was never submitted")
        if not verify_revocation(rev, target, chain, self.config.vendor_public_key):
            raise IllegitimateRevocation("revocation signature or policy check failed")
        return self._admit_revocation(rev)

    def _admit_revocation(self, rev: RevocationMessage, journal: bool = True) -> RevocationCommitment:
        h = rev.target_cert_hash
        # Idempotent resubmission of a byte-identical message.
        if h in self.registry:
            for rb, ts in self.registry[h].revocations:
                if rb == rev.canonical_bytes:
                    return self._sign_rev_commitment(rev, ts)
        for pending in self.pending_revs:
            if pending.canonical_bytes == rev.canonical_bytes:
                return self._sign_rev_commitment(rev, self.next_update_time())
        if rev.signer_role == SignerRole.REVOCATION_KEY:
            if h in self.rk_revocations:
                raise DuplicateRkRevocation("the revocation key was already used for this certificate")
            self.rk_revocations[h] = rev.rev_hash
        self.pending_revs.append(rev)
        if journal and self._journal is not None:
            self._journal.append(jr.REC_REVOCATION, rev.canonical_bytes)
        return self._sign_rev_commitment(rev, self.next_update_time())

    def _sign_rev_commitment(self, rev: RevocationMessage, ts: int) -> RevocationCommitment:
        payload = rev.rev_hash.value + u64(ts)
        sig = self.key.sign(TAG_REVOCATION_COMMITMENT, payload)
        return RevocationCommitment(rev_hash=rev.rev_hash, timestamp=ts, log_signature=sig)

    def submit_tcrl_hash(self, tcrl_hash: Digest) -> RevocationCommitment:
        """Queue a vendor revocation bundle by its hash; the tcrl module
        verifies the vendor signature before calling this."""
        return self._admit_tcrl(tcrl_hash)

    def _admit_tcrl(self, tcrl_hash: Digest, journal: bool = True) -> RevocationCommitment:
        if tcrl_hash not in self.pending_tcrls:
            self.pending_tcrls.append(tcrl_hash)
            if journal and self._journal is not None:
                self._journal.append(jr.REC_TCRL, tcrl_hash.value)
        payload = tcrl_hash.value + u64(self.next_update_time())
        sig = self.key.sign(TAG_TCRL, payload)
        return RevocationCommitment(
            rev_hash=tcrl_hash, timestamp=self.next_update_time(), log_signature=sig
        )

    # -- the update cycle --------------------------------------------------

    def run_update(self, now: int | None = None) -> SignedRoot:
        now = self.next_update_time() if now is None else now
        if now < self.last_update_time + self.config.scheduling_period:
            raise UpdateTooEarly(
                f"next update is due at {self.next_update_time()}, got {now}"
            )
        return self._apply_update(now)

    def _apply_update(self, now: int, journal: bool = True) -> SignedRoot:
        batch: list[TimeTreeEntry] = []
        for h in self.pending_certs:
            cert = self.certs[h]
            parent = resolve_parent(cert, self.key_owner)
            batch.append(TimeTreeEntry(EntryKind.CERT, cert.canonical_bytes, now))
            self.registry[h] = RegisteredCert(
                cert_bytes=cert.canonical_bytes,
                reg_ts=now,
                parent=parent,
                revocations=[],
                not_after=cert.not_after,
            )
            self.key_owner.setdefault(cert.subject_key_id, h)
            self.children.setdefault(h, [])
            self.children.setdefault(parent, []).append(h)
            self._mark_dirty(parent)
        self.pending_certs.clear()
        self.pending_set.clear()

        for rev in self.pending_revs:
            batch.append(TimeTreeEntry(EntryKind.REVOCATION, rev.canonical_bytes, now))
            record = self.registry[rev.target_cert_hash]
            record.revocations.append((rev.canonical_bytes, now))
            self._mark_dirty(record.parent)
        self.pending_revs.clear()

        for tcrl_hash in self.pending_tcrls:
            batch.append(TimeTreeEntry(EntryKind.TCRL, tcrl_hash.value, now))
        self.pending_tcrls.clear()

        if self._dirty:
            forest_root = self.forest.rebuild(self.registry, self.children, dirty=self._dirty)
        else:
            forest_root = self.forest.top_root()  # nothing changed this period
        self._dirty = set()
        batch.append(TimeTreeEntry(EntryKind.REV_TREE_ROOT, forest_root.value, now))
        root = self.tree.append(batch)
        sig = self.key.sign(TAG_SIGNED_ROOT, root.value + u64(now))
        signed = SignedRoot(root=root, timestamp=now, log_signature=sig)
        self.updates.append(
            UpdateRecord(
                timestamp=now,
                tree_size=self.tree.size,
                signed_root=signed,
                forest_root=forest_root,
                root_entry_index=self.tree.size - 1,
            )
        )
        self.last_update_time = now
        if journal and self._journal is not None:
            self._journal.append(jr.REC_UPDATE, u64(now))
        return signed

    def _mark_dirty(self, key: Digest | None) -> None:
        # A change inside a subtree ripples up: every ancestor's leaf embeds
        # the child subtree root.
        while True:
            self._dirty.add(key)
            if key is None:
                return
            key = self.registry[key].parent

    # -- queries -----------------------------------------------------------

    def get_proof(
        self, query: list[Digest]
    ) -> tuple[ChainPresenceProof, SignedRoot, list[PendingRevocation]]:
        latest = self.latest
        try:
            levels = self.forest.prove_chain(query)
        except NotFoundAtLevel as e:
            absence = self._absence_for(query, e.level)
            raise UnknownLeaf(e.level, absence, latest.signed_root) from e
        proof = ChainPresenceProof(
            levels=tuple(levels),
            root_entry_proof=self.tree.inclusion_proof(latest.root_entry_index, latest.tree_size),
        )
        return proof, latest.signed_root, self._pending_for_levels(levels)

    def _pending_for_levels(self, levels: list[SubtreeLeafRecord]) -> list[PendingRevocation]:
        targets = set()
        for rec in levels:
            cert_hash = self.forest.cert_hash_of(rec.id_hash)
            if cert_hash is not None:
                targets.add(cert_hash)
        out = []
        for rev in self.pending_revs:
            if rev.target_cert_hash in targets:
                out.append(PendingRevocation(rev, self._sign_rev_commitment(rev, self.next_update_time())))
        return out

    def pending_revocations_for(self, chain: CertChain) -> list[PendingRevocation]:
        hashes = {c.cert_hash for c in chain.certs}
        return [
            PendingRevocation(rev, self._sign_rev_commitment(rev, self.next_update_time()))
            for rev in self.pending_revs
            if rev.target_cert_hash in hashes
        ]

    def prove_absence(self, level_path: list[Digest], missing: Digest) -> AbsenceProof:
        latest = self.latest
        ancestors, empty, size, left, right = self.forest.prove_absence_records(level_path, missing)
        return AbsenceProof(
            levels=tuple(ancestors),
            missing=missing,
            empty=empty,
            subtree_size=size,
            left=left,
            right=right,
            root_entry_proof=self.tree.inclusion_proof(latest.root_entry_index, latest.tree_size),
        )

    def _absence_for(self, query: list[Digest], level: int) -> AbsenceProof:
        return self.prove_absence(query[:level], query[level])

    def get_consistency(self, old_size: int, new_size: int) -> ConsistencyProof:
        return self.tree.consistency_proof(old_size, new_size)

    def get_entries(self, start: int, end: int | None = None) -> list[TimeTreeEntry]:
        return self.tree.entries(start, end)

    # -- recovery ----------------------------------------------------------

    @classmethod
    def recover(
        cls,
        config: LogConfig,
        signing_key: KeyPair,
        start_time: int,
        journal_path,
    ) -> "LogServer":
        """Rebuild the full state by replaying the journal, then continue
        appending to it."""
        records = jr.Journal.replay(journal_path)
        log = cls(config, signing_key, start_time, journal=None)
        for rec in records:
            if rec.kind == jr.REC_CERT:
                cert = decode_certificate(rec.payload)
                h = cert.cert_hash
                if h not in log.registry and h not in log.pending_set:
                    log.certs[h] = cert
                    log.pending_certs.append(h)
                    log.pending_set.add(h)
            elif rec.kind == jr.REC_REVOCATION:
                rev = decode_revocation(rec.payload)
                log._admit_revocation(rev, journal=False)
            elif rec.kind == jr.REC_TCRL:
                log._admit_tcrl(Digest(rec.payload), journal=False)
            elif rec.kind == jr.REC_UPDATE:
                now = Reader(rec.payload).u64()
                log._apply_update(now, journal=False)
        log._journal = jr.Journal(journal_path)
        return log
