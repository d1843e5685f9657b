"""Canonical certificates, chains, and revocation messages.

Certificates use a native deterministic byte format rather than X.509/DER:
identical field values always produce identical bytes, so hashes and
signatures are reproducible everywhere. CA certificates additionally embed a
dedicated revocation public key whose private half stays offline until the
CA needs to cut itself off from a chosen point in time.

Two revocation shapes exist. A leaf revocation simply invalidates a non-CA
certificate. A CA revocation carries a cut-off timestamp: everything the
revoked key did at or after that instant is void, everything before stays
valid. Who may sign which shape is fixed by a policy matrix (owner key,
ancestor CA keys, the CA's own revocation key, or the software vendor key).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import IntEnum
from functools import cached_property

from .crypto import (
    DIGEST_LEN,
    TAG_CA_REVOKE,
    TAG_CERT_ISSUE,
    TAG_LEAF_REVOKE,
    Digest,
    KeyPair,
    Signature,
    hash_leaf,
    key_id_of,
    verify,
)
from .wire import Reader, lp, u8, u16, u64


class CertError(Exception):
    pass


class PolicyViolation(CertError):
    """Signer role not allowed for this target kind."""


class TimestampAfterExpiry(CertError):
    """CA revocation cut-off must precede the certificate's expiry."""


class InvalidChain(CertError):
    pass


class RevocationKind(IntEnum):
    LEAF_REVOKE = 1
    CA_REVOKE_FROM = 2


class SignerRole(IntEnum):
    OWN_KEY = 0
    PARENT_CA = 1
    REVOCATION_KEY = 2
    VENDOR = 3


# (kind, role) pairs accepted anywhere in the system.
ALLOWED_REVOCATIONS = frozenset(
    {
        (RevocationKind.LEAF_REVOKE, SignerRole.OWN_KEY),
        (RevocationKind.LEAF_REVOKE, SignerRole.PARENT_CA),
        (RevocationKind.LEAF_REVOKE, SignerRole.VENDOR),
        (RevocationKind.CA_REVOKE_FROM, SignerRole.REVOCATION_KEY),
        (RevocationKind.CA_REVOKE_FROM, SignerRole.PARENT_CA),
        (RevocationKind.CA_REVOKE_FROM, SignerRole.VENDOR),
    }
)


@dataclass(frozen=True)
class Certificate:
    serial: int
    subject_name: str
    issuer_key_id: Digest
    subject_public_key: bytes
    is_ca: bool
    not_before: int
    not_after: int
    revocation_public_key: bytes | None
    issuer_signature: Signature

    def check_fields(self) -> None:
        if self.not_before >= self.not_after:
            raise CertError("not_before must precede not_after")
        if self.is_ca != (self.revocation_public_key is not None):
            raise CertError("revocation key present iff certificate is a CA")

    @cached_property
    def tbs_bytes(self) -> bytes:
        return canonical_tbs_bytes(self)

    @cached_property
    def canonical_bytes(self) -> bytes:
        return self.tbs_bytes + self.issuer_signature.encode()

    @cached_property
    def cert_hash(self) -> Digest:
        return hash_leaf(self.canonical_bytes)

    @cached_property
    def subject_key_id(self) -> Digest:
        return key_id_of(self.subject_public_key)

    @property
    def is_self_signed(self) -> bool:
        return self.issuer_key_id == self.subject_key_id


def canonical_tbs_bytes(cert: Certificate) -> bytes:
    """Deterministic to-be-signed encoding of every field except the signature."""
    out = u64(cert.serial)
    out += lp(cert.subject_name.encode("utf-8"))
    out += cert.issuer_key_id.value
    out += lp(cert.subject_public_key)
    out += u8(1 if cert.is_ca else 0)
    out += u64(cert.not_before)
    out += u64(cert.not_after)
    if cert.revocation_public_key is not None:
        out += u8(1) + lp(cert.revocation_public_key)
    else:
        out += u8(0)
    return out


def decode_certificate(data: bytes) -> Certificate:
    r = Reader(data)
    serial = r.u64()
    subject_name = r.lp().decode("utf-8")
    issuer_key_id = Digest(r.take(DIGEST_LEN))
    subject_public_key = r.lp()
    is_ca = r.u8() == 1
    not_before = r.u64()
    not_after = r.u64()
    rk = r.lp() if r.u8() == 1 else None
    sig = Signature.read_from(r)
    r.done()
    cert = Certificate(
        serial=serial,
        subject_name=subject_name,
        issuer_key_id=issuer_key_id,
        subject_public_key=subject_public_key,
        is_ca=is_ca,
        not_before=not_before,
        not_after=not_after,
        revocation_public_key=rk,
        issuer_signature=sig,
    )
    cert.check_fields()
    return cert


def make_certificate(
    serial: int,
    subject_name: str,
    subject_public_key: bytes,
    is_ca: bool,
    not_before: int,
    not_after: int,
    issuer_key: KeyPair,
    revocation_public_key: bytes | None = None,
) -> Certificate:
    """Build and sign a certificate; pass the subject's own key to self-sign."""
    unsigned = Certificate(
        serial=serial,
        subject_name=subject_name,
        issuer_key_id=issuer_key.key_id,
        subject_public_key=subject_public_key,
        is_ca=is_ca,
        not_before=not_before,
        not_after=not_after,
        revocation_public_key=revocation_public_key,
        issuer_signature=Signature(issuer_key.key_id, TAG_CERT_ISSUE, b""),
    )
    unsigned.check_fields()
    sig = issuer_key.sign(TAG_CERT_ISSUE, canonical_tbs_bytes(unsigned))
    return replace(unsigned, issuer_signature=sig)


@dataclass(frozen=True)
class CertChain:
    """Ordered root-to-leaf certificate chain."""

    certs: tuple[Certificate, ...]

    def __post_init__(self):
        if not self.certs:
            raise InvalidChain("empty chain")

    @property
    def root(self) -> Certificate:
        return self.certs[0]

    @property
    def leaf(self) -> Certificate:
        return self.certs[-1]

    def __len__(self) -> int:
        return len(self.certs)

    def verify_structure(self, require_leaf: bool = True) -> None:
        """Raise InvalidChain unless every link is sound.

        require_leaf=False admits chains ending at a CA certificate, as used
        when submitting a revocation of a CA.
        """
        root = self.certs[0]
        if not root.is_ca:
            raise InvalidChain("root certificate must be a CA")
        if not root.is_self_signed:
            raise InvalidChain("root certificate must be self-signed")
        if not verify(root.subject_public_key, TAG_CERT_ISSUE, root.tbs_bytes, root.issuer_signature):
            raise InvalidChain("root self-signature invalid")
        for i, cert in enumerate(self.certs[1:], start=1):
            parent = self.certs[i - 1]
            if not parent.is_ca:
                raise InvalidChain(f"certificate {i - 1} issues children but is not a CA")
            if cert.issuer_key_id != parent.subject_key_id:
                raise InvalidChain(f"certificate {i} names a different issuer key")
            if not verify(parent.subject_public_key, TAG_CERT_ISSUE, cert.tbs_bytes, cert.issuer_signature):
                raise InvalidChain(f"certificate {i} signature invalid")
        for cert in self.certs:
            cert.check_fields()
        if require_leaf:
            if self.certs[-1].is_ca:
                raise InvalidChain("chain must end with a non-CA certificate")
            for cert in self.certs[:-1]:
                if not cert.is_ca:
                    raise InvalidChain("only the last certificate may be a non-CA")


@dataclass(frozen=True)
class RevocationMessage:
    kind: RevocationKind
    target_cert_hash: Digest
    rev_timestamp: int | None  # present iff kind is CA_REVOKE_FROM
    signer_role: SignerRole
    signer_depth: int  # chain index of the signing ancestor, for PARENT_CA
    signer_key_id: Digest
    signature: Signature

    @property
    def tag(self) -> int:
        return TAG_LEAF_REVOKE if self.kind == RevocationKind.LEAF_REVOKE else TAG_CA_REVOKE

    def signed_payload(self) -> bytes:
        if self.kind == RevocationKind.LEAF_REVOKE:
            return self.target_cert_hash.value
        return self.target_cert_hash.value + u64(self.rev_timestamp)

    @cached_property
    def canonical_bytes(self) -> bytes:
        out = u8(int(self.kind))
        out += self.target_cert_hash.value
        if self.kind == RevocationKind.CA_REVOKE_FROM:
            out += u64(self.rev_timestamp)
        out += u8(int(self.signer_role))
        out += u16(self.signer_depth)
        out += self.signer_key_id.value
        out += self.signature.encode()
        return out

    @cached_property
    def rev_hash(self) -> Digest:
        return hash_leaf(self.canonical_bytes)


def decode_revocation(data: bytes) -> RevocationMessage:
    r = Reader(data)
    kind = RevocationKind(r.u8())
    target = Digest(r.take(DIGEST_LEN))
    rev_ts = r.u64() if kind == RevocationKind.CA_REVOKE_FROM else None
    role = SignerRole(r.u8())
    depth = r.u16()
    signer_key_id = Digest(r.take(DIGEST_LEN))
    sig = Signature.read_from(r)
    r.done()
    return RevocationMessage(
        kind=kind,
        target_cert_hash=target,
        rev_timestamp=rev_ts,
        signer_role=role,
        signer_depth=depth,
        signer_key_id=signer_key_id,
        signature=sig,
    )


def make_revocation(
    kind: RevocationKind,
    target: Certificate,
    signer_key: KeyPair,
    signer_role: SignerRole,
    rev_timestamp: int | None = None,
    signer_depth: int = 0,
) -> RevocationMessage:
    """Create a signed revocation message, enforcing the policy matrix."""
    if (kind, signer_role) not in ALLOWED_REVOCATIONS:
        raise PolicyViolation(f"{signer_role.name} may not issue {kind.name}")
    if kind == RevocationKind.LEAF_REVOKE:
        if target.is_ca:
            raise PolicyViolation("leaf revocation cannot target a CA certificate")
        if rev_timestamp is not None:
            raise PolicyViolation("leaf revocations carry no cut-off timestamp")
    else:
        if not target.is_ca:
            raise PolicyViolation("CA revocation cannot target a non-CA certificate")
        if rev_timestamp is None:
            raise PolicyViolation("CA revocation requires a cut-off timestamp")
        if rev_timestamp >= target.not_after:
            raise TimestampAfterExpiry("cut-off must precede certificate expiry")
    if signer_role == SignerRole.REVOCATION_KEY:
        if key_id_of(target.revocation_public_key or b"") != signer_key.key_id:
            raise PolicyViolation("key is not the target's revocation key")
    if signer_role == SignerRole.OWN_KEY:
        if key_id_of(target.subject_public_key) != signer_key.key_id:
            raise PolicyViolation("key is not the target's own key")
    msg = RevocationMessage(
        kind=kind,
        target_cert_hash=target.cert_hash,
        rev_timestamp=rev_timestamp,
        signer_role=signer_role,
        signer_depth=signer_depth,
        signer_key_id=signer_key.key_id,
        signature=Signature(signer_key.key_id, 0x01, b""),
    )
    sig = signer_key.sign(msg.tag, msg.signed_payload())
    return replace(msg, signature=sig)


def verify_revocation(
    rev: RevocationMessage,
    target: Certificate,
    chain: CertChain,
    vendor_pub: bytes,
) -> bool:
    """Pure predicate: is rev a well-formed, correctly signed revocation of target?

    Temporal applicability (whether the revocation was issued inside its
    signer's legitimacy period) is the validator's job, not checked here.
    """
    if (rev.kind, rev.signer_role) not in ALLOWED_REVOCATIONS:
        return False
    if rev.target_cert_hash != target.cert_hash:
        return False
    if rev.kind == RevocationKind.LEAF_REVOKE:
        if target.is_ca or rev.rev_timestamp is not None:
            return False
    else:
        if not target.is_ca or rev.rev_timestamp is None:
            return False
        if rev.rev_timestamp >= target.not_after:
            return False
    try:
        idx = next(i for i, c in enumerate(chain.certs) if c.cert_hash == target.cert_hash)
    except StopIteration:
        return False

    if rev.signer_role == SignerRole.OWN_KEY:
        signer_pub = target.subject_public_key
    elif rev.signer_role == SignerRole.REVOCATION_KEY:
        if target.revocation_public_key is None:
            return False
        if key_id_of(target.revocation_public_key) != rev.signer_key_id:
            return False
        signer_pub = target.revocation_public_key
    elif rev.signer_role == SignerRole.VENDOR:
        signer_pub = vendor_pub
    else:  # PARENT_CA: any proper ancestor in the chain
        ancestor = None
        for j in range(idx):
            if chain.certs[j].subject_key_id == rev.signer_key_id:
                ancestor = chain.certs[j]
                break
        if ancestor is None:
            return False
        signer_pub = ancestor.subject_public_key
    return verify(signer_pub, rev.tag, rev.signed_payload(), rev.signature)


def names_match(a: str, b: str) -> bool:
    # Exact match, case-insensitive ASCII; no wildcards.
    return a.lower() == b.lower()


def pre_validate(
    chain: CertChain,
    name: str,
    trust_roots: frozenset[Digest] | set[Digest],
    now: int,
) -> bool:
    """Structural chain validation against a domain name and trust anchors."""
    try:
        chain.verify_structure(require_leaf=True)
    except InvalidChain:
        return False
    if not names_match(chain.leaf.subject_name, name):
        return False
    if chain.root.cert_hash not in trust_roots:
        return False
    for cert in chain.certs:
        if not cert.not_before <= now <= cert.not_after:
            return False
    return True
