"""Randomized end-to-end scenario generator shared by the validator tests and
the acceptance suite. Each scenario drives a real log (registrations,
revocations across all classes, updates, pending messages) and hands back
everything needed to compare the production validator with the brute-force
rule interpreter."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from pkisn.certs import (
    CertChain,
    RevocationKind,
    SignerRole,
    decode_revocation,
    make_certificate,
    make_revocation,
)
from pkisn.crypto import KeyPair, KeyRole
from pkisn.log import DuplicateRkRevocation, LogConfig, LogServer
from pkisn.revtree import cert_id_hash
from pkisn.validation import ValidationInput, is_valid

from oracles import oracle_validate

T0 = 1_600_000_000
PERIOD = 100

_serial = itertools.count(1)


class KeyPool:
    """Shared keypairs so ten thousand scenarios do not pay for keygen each."""

    def __init__(self, n_ca=12, n_leaf=6, n_rk=12):
        self.ca = [KeyPair.generate(KeyRole.STANDARD_CA) for _ in range(n_ca)]
        self.rk = [KeyPair.generate(KeyRole.REVOCATION) for _ in range(n_rk)]
        self.leaf = [KeyPair.generate(KeyRole.STANDARD_LEAF) for _ in range(n_leaf)]
        self.vendor = KeyPair.generate(KeyRole.VENDOR)
        self.log = KeyPair.generate(KeyRole.LOG)


def _build_chain(rng: random.Random, pool: KeyPool, depth: int):
    """Chain of `depth` certs with fresh serials; returns (chain, keys, rks)."""
    keys = []
    rks = []
    certs = []
    horizon = T0 + rng.choice([1500, 4000, 12000, 40000])
    issuer_key = None
    # Distinct CA keys per level: the forest places a certificate under the
    # first registered holder of its issuer key, so key reuse across levels
    # of one chain would knock it off the query path.
    ca_keys = rng.sample(pool.ca, depth - 1)
    rk_keys = rng.sample(pool.rk, depth - 1)
    for level in range(depth):
        is_leaf = level == depth - 1
        key = rng.choice(pool.leaf) if is_leaf else ca_keys[level]
        rk = None if is_leaf else rk_keys[level]
        not_after = horizon + rng.randrange(0, 3000)
        cert = make_certificate(
            serial=next(_serial),
            subject_name=f"host-{level}.example" if is_leaf else f"ca-{level}.example",
            subject_public_key=key.public_bytes,
            is_ca=not is_leaf,
            not_before=T0 - rng.randrange(1, 2000),
            not_after=not_after,
            issuer_key=issuer_key or key,
            revocation_public_key=rk.public_bytes if rk else None,
        )
        keys.append(key)
        rks.append(rk)
        certs.append(cert)
        issuer_key = key
    return CertChain(tuple(certs)), keys, rks


@dataclass
class ScenarioOutcome:
    impl: object  # ValidationResult
    oracle: tuple  # (decision, reason)
    log: object
    chain: object
    cc: object
    name: str
    now: int
    had_pending: bool

    def __iter__(self):
        # Unpack compatibility: (impl, oracle, log, chain, cc)
        return iter((self.impl, self.oracle, self.log, self.chain, self.cc))


def run_random_scenario(seed: int, pool: KeyPool) -> ScenarioOutcome:
    """Drive one random timeline end to end; see ScenarioOutcome."""
    rng = random.Random(seed)
    depth = rng.randint(2, 4)
    chain, keys, rks = _build_chain(rng, pool, depth)
    name = chain.leaf.subject_name if rng.random() > 0.03 else "wrong.example"

    config = LogConfig(
        scheduling_period=PERIOD,
        trust_roots=frozenset({chain.root.cert_hash}),
        vendor_public_key=pool.vendor.public_bytes,
    )
    log = LogServer(config, pool.log, start_time=T0)

    for _ in range(rng.randint(0, 2)):
        log.run_update()
    log.submit_chain(chain)
    # Occasionally register sibling leaves so forests are not single-path.
    if rng.random() < 0.3:
        sibling = make_certificate(
            serial=next(_serial),
            subject_name="sibling.example",
            subject_public_key=rng.choice(pool.leaf).public_bytes,
            is_ca=False,
            not_before=T0 - 10,
            not_after=T0 + 50_000,
            issuer_key=keys[-2],
        )
        log.submit_chain(CertChain(tuple(chain.certs[:-1]) + (sibling,)))
    log.run_update()

    n_revs = rng.randint(0, 8)
    leave_pending = rng.random() < 0.25
    for i in range(n_revs):
        for _ in range(rng.randint(0, 2)):
            log.run_update()
        k = rng.randrange(depth)
        target = chain.certs[k]
        prefix = CertChain(chain.certs[: k + 1])
        try:
            if target.is_ca:
                choice = rng.random()
                cut = rng.randrange(T0 - 1500, target.not_after)
                if choice < 0.34:
                    rev = make_revocation(
                        RevocationKind.CA_REVOKE_FROM, target, pool.vendor,
                        SignerRole.VENDOR, rev_timestamp=cut,
                    )
                elif choice < 0.67:
                    rev = make_revocation(
                        RevocationKind.CA_REVOKE_FROM, target, rks[k],
                        SignerRole.REVOCATION_KEY, rev_timestamp=cut,
                    )
                else:
                    if k == 0:
                        continue  # roots have no parents
                    j = rng.randrange(k)
                    rev = make_revocation(
                        RevocationKind.CA_REVOKE_FROM, target, keys[j],
                        SignerRole.PARENT_CA, rev_timestamp=cut, signer_depth=j,
                    )
            else:
                choice = rng.random()
                if choice < 0.34:
                    rev = make_revocation(
                        RevocationKind.LEAF_REVOKE, target, pool.vendor, SignerRole.VENDOR
                    )
                elif choice < 0.67:
                    rev = make_revocation(
                        RevocationKind.LEAF_REVOKE, target, keys[k], SignerRole.OWN_KEY
                    )
                else:
                    j = rng.randrange(k)
                    rev = make_revocation(
                        RevocationKind.LEAF_REVOKE, target, keys[j],
                        SignerRole.PARENT_CA, signer_depth=j,
                    )
            log.submit_revocation(prefix, rev)
        except DuplicateRkRevocation:
            continue
        if not (leave_pending and i == n_revs - 1):
            log.run_update()

    if log.pending_revs and not leave_pending:
        log.run_update()

    cc = log.submit_chain(chain)  # historical timestamps, fresh signature
    ts_root_first = list(reversed(cc.timestamps))
    query = [
        cert_id_hash(c.canonical_bytes, t) for c, t in zip(chain.certs, ts_root_first)
    ]
    proof, signed_root, pending = log.get_proof(query)
    now = log.last_update_time + rng.randrange(0, PERIOD)

    inp = ValidationInput(
        chain=chain,
        cc=cc,
        proof=proof,
        signed_root=signed_root,
        pending_revocations=pending,
        name=name,
        now=now,
        trust_roots=config.trust_roots,
        log_pub=pool.log.public_bytes,
        vendor_pub=pool.vendor.public_bytes,
        max_root_age=20 * PERIOD,
    )
    impl = is_valid(inp)

    revs_per_cert = []
    for cert in chain.certs:
        entry = log.registry[cert.cert_hash]
        revs = [(decode_revocation(rb), ts) for rb, ts in entry.revocations]
        revs += [
            (p.revocation, now)
            for p in pending
            if p.revocation.target_cert_hash == cert.cert_hash
        ]
        revs_per_cert.append(revs)
    oracle = oracle_validate(
        list(chain.certs),
        ts_root_first,
        revs_per_cert,
        now,
        name,
        config.trust_roots,
        pool.vendor.public_bytes,
    )
    return ScenarioOutcome(
        impl=impl,
        oracle=oracle,
        log=log,
        chain=chain,
        cc=cc,
        name=name,
        now=now,
        had_pending=bool(pending),
    )
