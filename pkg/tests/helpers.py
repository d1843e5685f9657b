"""Shared builders for keys, certificates, and chains used across the suite."""

from __future__ import annotations

from pkisn.certs import CertChain, Certificate, make_certificate
from pkisn.crypto import KeyPair, KeyRole

DAY = 86400
YEAR = 365 * DAY
T0 = 1_600_000_000


def ca_keys() -> tuple[KeyPair, KeyPair]:
    """Standard key plus offline revocation key for a CA."""
    return KeyPair.generate(KeyRole.STANDARD_CA), KeyPair.generate(KeyRole.REVOCATION)


def make_root(
    name: str,
    key: KeyPair,
    rk: KeyPair,
    serial: int = 1,
    not_before: int = T0,
    not_after: int = T0 + 30 * YEAR,
) -> Certificate:
    return make_certificate(
        serial=serial,
        subject_name=name,
        subject_public_key=key.public_bytes,
        is_ca=True,
        not_before=not_before,
        not_after=not_after,
        issuer_key=key,
        revocation_public_key=rk.public_bytes,
    )


def make_ca(
    name: str,
    key: KeyPair,
    rk: KeyPair,
    issuer_key: KeyPair,
    serial: int = 2,
    not_before: int = T0,
    not_after: int = T0 + 10 * YEAR,
) -> Certificate:
    return make_certificate(
        serial=serial,
        subject_name=name,
        subject_public_key=key.public_bytes,
        is_ca=True,
        not_before=not_before,
        not_after=not_after,
        issuer_key=issuer_key,
        revocation_public_key=rk.public_bytes,
    )


def make_leaf(
    name: str,
    key: KeyPair,
    issuer_key: KeyPair,
    serial: int = 3,
    not_before: int = T0,
    not_after: int = T0 + 3 * YEAR,
) -> Certificate:
    return make_certificate(
        serial=serial,
        subject_name=name,
        subject_public_key=key.public_bytes,
        is_ca=False,
        not_before=not_before,
        not_after=not_after,
        issuer_key=issuer_key,
    )


class ChainFixture:
    """Three-level chain (root CA, intermediate CA, leaf) with all keys."""

    def __init__(self, domain: str = "example.com", serial_base: int = 100):
        self.root_key, self.root_rk = ca_keys()
        self.inter_key, self.inter_rk = ca_keys()
        self.leaf_key = KeyPair.generate(KeyRole.STANDARD_LEAF)
        self.root = make_root("Test Root CA", self.root_key, self.root_rk, serial=serial_base)
        self.inter = make_ca(
            "Test Intermediate CA",
            self.inter_key,
            self.inter_rk,
            issuer_key=self.root_key,
            serial=serial_base + 1,
        )
        self.leaf = make_leaf(domain, self.leaf_key, issuer_key=self.inter_key, serial=serial_base + 2)
        self.chain = CertChain((self.root, self.inter, self.leaf))
        self.domain = domain
