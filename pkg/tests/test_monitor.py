from dataclasses import replace

import pytest

from pkisn.certs import CertChain, RevocationKind, SignerRole, make_revocation
from pkisn.crypto import KeyPair, KeyRole, hash_leaf
from pkisn.log import LogConfig, LogServer, SignedRoot
from pkisn.monitor import (
    REPORT_FORKED_ROOTS,
    REPORT_INCORRECT_CC,
    REPORT_INVALID_ENTRY,
    REPORT_ROOT_MISMATCH,
    REPORT_SUPPRESSED_REVOCATION,
    DeltaItem,
    FullMonitor,
    GapInDelta,
    MinimizedTimeTree,
    RootMismatch,
    UnknownTimestamp,
    build_delta,
    verify_fork_report,
)
from pkisn.revtree import cert_id_hash
from pkisn.timetree import EntryKind, TimeTreeEntry

from helpers import T0, YEAR, ChainFixture, make_leaf

PERIOD = 3600


def make_env(fx, period=PERIOD):
    vendor = KeyPair.generate(KeyRole.VENDOR)
    log_key = KeyPair.generate(KeyRole.LOG)
    config = LogConfig(
        scheduling_period=period,
        trust_roots=frozenset({fx.root.cert_hash}),
        vendor_public_key=vendor.public_bytes,
    )
    log = LogServer(config, log_key, start_time=T0)
    monitor = FullMonitor(config.trust_roots, log_key.public_bytes, vendor.public_bytes)
    return log, monitor, vendor, log_key


def test_honest_log_syncs_clean():
    fx = ChainFixture()
    log, monitor, vendor, _ = make_env(fx)
    log.submit_chain(fx.chain)
    log.run_update()
    res1 = monitor.sync_from(log)
    assert res1.ok and res1.reports == []
    rev = make_revocation(RevocationKind.LEAF_REVOKE, fx.leaf, fx.leaf_key, SignerRole.OWN_KEY)
    log.submit_revocation(fx.chain, rev)
    log.run_update()
    res2 = monitor.sync_from(log)
    assert res2.ok
    assert monitor.tree.root() == log.tree.root()
    assert monitor.forest.top_root() == log.forest.top_root()


def test_unverifiable_revocation_entry_reported():
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx)
    log.submit_chain(fx.chain)
    log.run_update()
    monitor.sync_from(log)
    # The log (misbehaving) appends a revocation signed by a stranger.
    stranger = KeyPair.generate(KeyRole.STANDARD_CA)
    bogus = make_revocation(
        RevocationKind.LEAF_REVOKE, fx.leaf, stranger, SignerRole.PARENT_CA, signer_depth=0
    )
    log.pending_revs.append(bogus)
    log.run_update()
    res = monitor.sync_from(log)
    kinds = [r.kind for r in res.reports]
    assert REPORT_INVALID_ENTRY in kinds
    # The tree root still matches: the content is bad, not the hashing.
    assert monitor.tree.root() == log.tree.root()


def test_root_mismatch_reported():
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx)
    log.submit_chain(fx.chain)
    sr = log.run_update()
    # Log signs a root that does not correspond to its entries.
    forged = SignedRoot(
        root=hash_leaf(b"not the real root"),
        timestamp=sr.timestamp,
        log_signature=log_key.sign(0x04, hash_leaf(b"not the real root").value + sr.timestamp.to_bytes(8, "big")),
    )
    res = monitor.full_sync(log.get_entries(0), forged)
    assert not res.ok
    assert any(r.kind == REPORT_ROOT_MISMATCH for r in res.reports)


def test_forest_root_entry_checked():
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx)
    log.submit_chain(fx.chain)
    log.run_update()
    entries = log.get_entries(0)
    # Tamper the forest-root entry, then re-sign the (now different) tree.
    bad = TimeTreeEntry(EntryKind.REV_TREE_ROOT, hash_leaf(b"wrong forest").value, entries[-1].reg_timestamp)
    tampered = entries[:-1] + [bad]
    from pkisn.timetree import TimeTree

    shadow = TimeTree()
    shadow.append(tampered)
    forged = SignedRoot(
        root=shadow.root(),
        timestamp=bad.reg_timestamp,
        log_signature=log_key.sign(0x04, shadow.root().value + bad.reg_timestamp.to_bytes(8, "big")),
    )
    res = monitor.full_sync(tampered, forged)
    assert any(
        r.kind == REPORT_INVALID_ENTRY and "forest root" in r.evidence["why"]
        for r in res.reports
    )


def test_check_root_consistent_fork_unknown():
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx)
    log.submit_chain(fx.chain)
    sr = log.run_update()
    monitor.sync_from(log)
    verdict, report = monitor.check_root(sr)
    assert verdict == "consistent" and report is None

    other_root = hash_leaf(b"split view")
    fork = SignedRoot(
        root=other_root,
        timestamp=sr.timestamp,
        log_signature=log_key.sign(0x04, other_root.value + sr.timestamp.to_bytes(8, "big")),
    )
    verdict, report = monitor.check_root(fork)
    assert verdict == "fork"
    assert report.kind == REPORT_FORKED_ROOTS
    assert verify_fork_report(report, log_key.public_bytes)
    # Tampered evidence must not verify.
    bad = replace(report, evidence={**report.evidence, "root_b": report.evidence["root_a"]})
    assert not verify_fork_report(bad, log_key.public_bytes)

    unknown = SignedRoot(
        root=other_root,
        timestamp=sr.timestamp + 999,
        log_signature=log_key.sign(0x04, other_root.value + (sr.timestamp + 999).to_bytes(8, "big")),
    )
    with pytest.raises(UnknownTimestamp):
        monitor.check_root(unknown)


def test_incorrect_cc_detected():
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx)
    cc = log.submit_chain(fx.chain)
    log.run_update()
    monitor.sync_from(log)
    assert monitor.check_chain_commitment(cc, fx.chain) is None
    # Forge a commitment promising an earlier registration.
    forged_ts = tuple(t - PERIOD for t in cc.timestamps)
    payload = cc.leaf_cert_hash.value + bytes([len(forged_ts)])
    for t in forged_ts:
        payload += t.to_bytes(8, "big")
    forged = type(cc)(
        leaf_cert_hash=cc.leaf_cert_hash,
        timestamps=forged_ts,
        log_signature=log_key.sign(0x03, payload),
    )
    report = monitor.check_chain_commitment(forged, fx.chain)
    assert report is not None and report.kind == REPORT_INCORRECT_CC
    assert report.evidence["promised_ts"] != report.evidence["observed_ts"]


def test_suppressed_revocation_detected():
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx)
    log.submit_chain(fx.chain)
    log.run_update()
    rev = make_revocation(RevocationKind.LEAF_REVOKE, fx.leaf, fx.leaf_key, SignerRole.OWN_KEY)
    rc = log.submit_revocation(fx.chain, rev)
    # The log "loses" the revocation, then updates past the promised time.
    log.pending_revs.clear()
    log.run_update()
    monitor.sync_from(log)
    report = monitor.check_revocation_commitment(rc)
    assert report is not None and report.kind == REPORT_SUPPRESSED_REVOCATION
    # Honest case: nothing to report.
    rc2 = log.submit_revocation(fx.chain, rev)
    log.run_update()
    monitor.sync_from(log)
    assert monitor.check_revocation_commitment(rc2) is None


# --- lightweight monitoring ---------------------------------------------------

def leaves_fixture(n_live=4, n_expired=6, period=PERIOD):
    """Log with a mix of long-lived and already-expired leaves."""
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx, period=period)
    expired = []
    live = []
    for i in range(n_expired):
        key = KeyPair.generate(KeyRole.STANDARD_LEAF)
        cert = make_leaf(
            f"old{i}.example.com", key, fx.inter_key, serial=2000 + i,
            not_before=T0 - YEAR, not_after=T0 + period,  # dies after first update
        )
        log.submit_chain(CertChain((fx.root, fx.inter, cert)))
        expired.append(cert)
    log.run_update()
    for i in range(n_live):
        key = KeyPair.generate(KeyRole.STANDARD_LEAF)
        cert = make_leaf(f"new{i}.example.com", key, fx.inter_key, serial=3000 + i)
        log.submit_chain(CertChain((fx.root, fx.inter, cert)))
        live.append(cert)
    log.run_update()
    return fx, log, vendor, log_key, expired, live


def test_delta_apply_reaches_log_root():
    fx, log, vendor, log_key, expired, live = leaves_fixture()
    now = log.last_update_time + 10 * PERIOD
    delta = build_delta(log, 0, now)
    state = MinimizedTimeTree(log_key.public_bytes)
    state.apply_delta(delta)
    assert state.root() == log.tree.root()
    assert state.size == log.tree.size


def test_delta_prunes_only_dead_regions():
    fx, log, vendor, log_key, expired, live = leaves_fixture()
    far = log.last_update_time + 10 * PERIOD
    delta = build_delta(log, 0, far)
    covers = [i for b in delta.batches for i in b.items if i.kind == "cover"]
    assert covers, "expired region should be covered"
    state = MinimizedTimeTree(log_key.public_bytes)
    state.apply_delta(delta)
    # Live certificates stay individually addressable; expired ones may not.
    for cert in live:
        entry_ts = log.registry[cert.cert_hash].reg_ts
        entry = TimeTreeEntry(EntryKind.CERT, cert.canonical_bytes, entry_ts)
        assert state.has_entry(entry.encode())


def test_nothing_expired_no_covers():
    fx, log, vendor, log_key, expired, live = leaves_fixture(n_expired=0)
    delta = build_delta(log, 0, log.last_update_time)
    assert all(i.kind != "cover" for b in delta.batches for i in b.items)


def test_revocations_travel_full_and_answer_queries():
    fx, log, vendor, log_key, expired, live = leaves_fixture()
    target = live[0]
    key_rev = make_revocation(
        RevocationKind.LEAF_REVOKE, target, fx.inter_key, SignerRole.PARENT_CA, signer_depth=1
    )
    log.submit_revocation(CertChain((fx.root, fx.inter, target)), key_rev)
    log.run_update()
    now = log.last_update_time + 10 * PERIOD
    delta = build_delta(log, 0, now)
    fulls = [i for b in delta.batches for i in b.items if i.kind == "full"]
    assert len(fulls) == 1
    state = MinimizedTimeTree(log_key.public_bytes)
    state.apply_delta(delta)
    revs = state.revocations_for(target.cert_hash)
    assert len(revs) == 1 and revs[0][0] == key_rev.canonical_bytes


def test_incremental_deltas_match_full_sync():
    fx = ChainFixture()
    log, monitor, vendor, log_key = make_env(fx)
    state = MinimizedTimeTree(log_key.public_bytes)
    log.submit_chain(fx.chain)
    log.run_update()
    state.apply_delta(build_delta(log, 0, log.last_update_time))
    assert state.root() == log.tree.root()
    for i in range(4):
        key = KeyPair.generate(KeyRole.STANDARD_LEAF)
        cert = make_leaf(f"d{i}.example.com", key, fx.inter_key, serial=4000 + i)
        log.submit_chain(CertChain((fx.root, fx.inter, cert)))
        log.run_update()
        state.apply_delta(build_delta(log, state.size, log.last_update_time))
        assert state.root() == log.tree.root(), i


def test_delta_gap_rejected():
    fx, log, vendor, log_key, _, _ = leaves_fixture()
    delta = build_delta(log, 4, log.last_update_time)
    state = MinimizedTimeTree(log_key.public_bytes)
    with pytest.raises(GapInDelta):
        state.apply_delta(delta)


def test_tampered_delta_hash_rejected():
    fx, log, vendor, log_key, _, _ = leaves_fixture()
    delta = build_delta(log, 0, log.last_update_time + 10 * PERIOD)
    bad_batches = list(delta.batches)
    items = list(bad_batches[0].items)
    victim = items[0]
    items[0] = DeltaItem(victim.kind, victim.level, victim.index, hash_leaf(b"tampered").value)
    bad_batches[0] = replace(bad_batches[0], items=tuple(items))
    bad = replace(delta, batches=tuple(bad_batches))
    state = MinimizedTimeTree(log_key.public_bytes)
    with pytest.raises(RootMismatch):
        state.apply_delta(bad)
    assert state.size == 0  # nothing committed


def test_client_proof_verifies_against_minimized_state():
    fx, log, vendor, log_key, expired, live = leaves_fixture()
    state = MinimizedTimeTree(log_key.public_bytes)
    state.apply_delta(build_delta(log, 0, log.last_update_time + 10 * PERIOD))
    cc = log.submit_chain(CertChain((fx.root, fx.inter, live[0])))
    chain = CertChain((fx.root, fx.inter, live[0]))
    query = [
        cert_id_hash(c.canonical_bytes, t) for c, t in zip(chain.certs, reversed(cc.timestamps))
    ]
    proof, sr, _ = log.get_proof(query)
    assert state.verify_client_proof(chain, list(cc.timestamps), proof, sr)
    # A root the monitor has never computed is not vouched for.
    rogue_sr = replace(sr, timestamp=sr.timestamp + 1)
    assert not state.verify_client_proof(chain, list(cc.timestamps), proof, rogue_sr)


def test_pruning_never_removes_required_hashes():
    fx, log, vendor, log_key, expired, live = leaves_fixture(n_live=3, n_expired=5)
    now = log.last_update_time + 10 * PERIOD
    delta = build_delta(log, 0, now)
    retained_level0 = set()
    covered = []
    for b in delta.batches:
        for item in b.items:
            if item.kind == "cover":
                covered.append(item.span())
            else:
                retained_level0.add(item.span()[0])
    entries = log.get_entries(0)
    for idx, entry in enumerate(entries):
        must_keep = entry.kind in (EntryKind.REV_TREE_ROOT, EntryKind.REVOCATION, EntryKind.TCRL)
        if entry.kind == EntryKind.CERT:
            h = hash_leaf(entry.payload)
            if log.registry[h].not_after + PERIOD > now:
                must_keep = True
        if must_keep:
            assert idx in retained_level0, idx
            assert not any(lo <= idx < hi for lo, hi in covered), idx
