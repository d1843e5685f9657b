"""Walkthrough: watching the log, on a budget or not, and shipping bundles.

A full monitor replays and re-verifies everything and can prove a split
view. A lightweight monitor gets by on delta updates: bare hashes for live
entries, one covering hash per expired region, full bytes only for
revocations, yet it recomputes the exact same root. A vendor builds a
log-committed revocation bundle that clients can validate against offline.

Run with: python3 demos/03_monitors_and_bundles.py
"""

from pkisn import (
    CertChain,
    FullMonitor,
    KeyPair,
    KeyRole,
    LogConfig,
    LogServer,
    MinimizedTimeTree,
    RevocationKind,
    SignerRole,
    build_delta,
    build_tcrl,
    commit_tcrl,
    make_certificate,
    make_revocation,
    validate_with_tcrl,
    verify_tcrl,
)
from pkisn.monitor import verify_fork_report

T0 = 1_600_000_000
HOUR = 3600
YEAR = 365 * 86400

root_key = KeyPair.generate(KeyRole.STANDARD_CA)
root_rk = KeyPair.generate(KeyRole.REVOCATION)
ca_key = KeyPair.generate(KeyRole.STANDARD_CA)
ca_rk = KeyPair.generate(KeyRole.REVOCATION)
leaf_key = KeyPair.generate(KeyRole.STANDARD_LEAF)
vendor = KeyPair.generate(KeyRole.VENDOR)
log_key = KeyPair.generate(KeyRole.LOG)

root = make_certificate(1, "Root", root_key.public_bytes, True, T0 - 10, T0 + 30 * YEAR,
                        root_key, root_rk.public_bytes)
ca = make_certificate(2, "CA", ca_key.public_bytes, True, T0 - 10, T0 + 15 * YEAR,
                      root_key, ca_rk.public_bytes)
log = LogServer(
    LogConfig(scheduling_period=HOUR, trust_roots=frozenset({root.cert_hash}),
              vendor_public_key=vendor.public_bytes),
    log_key, start_time=T0,
)

# A first batch of short-lived certificates that will expire, then a second
# batch of fresh ones; one of the fresh ones gets revoked.
old_chains = []
for i in range(6):
    cert = make_certificate(100 + i, f"old{i}.example", leaf_key.public_bytes, False,
                            T0 - 10, T0 + HOUR, ca_key)
    old_chains.append(CertChain((root, ca, cert)))
    log.submit_chain(old_chains[-1])
log.run_update()

live_chains = []
for i in range(4):
    cert = make_certificate(200 + i, f"new{i}.example", leaf_key.public_bytes, False,
                            T0 - 10, T0 + 2 * YEAR, ca_key)
    live_chains.append(CertChain((root, ca, cert)))
    log.submit_chain(live_chains[-1])
log.run_update()

victim = live_chains[0]
rev = make_revocation(RevocationKind.LEAF_REVOKE, victim.leaf, ca_key,
                      SignerRole.PARENT_CA, signer_depth=1)
log.submit_revocation(victim, rev)
log.run_update()

# --- full monitor: replicate, re-verify, compare roots ----------------------
monitor = FullMonitor(log.config.trust_roots, log_key.public_bytes, vendor.public_bytes)
result = monitor.sync_from(log)
print(f"full monitor synced {result.new_size} entries, clean={result.ok}")

verdict, _ = monitor.check_root(log.latest.signed_root)
print("client root vs monitor view:", verdict)

# A split view: the log signs a different root for the same instant.
from pkisn.crypto import hash_leaf
from pkisn.log import SignedRoot

other = hash_leaf(b"the view shown to someone else")
forked = SignedRoot(other, log.latest.signed_root.timestamp,
                    log_key.sign(0x04, other.value + log.latest.signed_root.timestamp.to_bytes(8, "big")))
verdict, report = monitor.check_root(forked)
print("split view detected:", verdict == "fork",
      "| third party accepts the evidence:", verify_fork_report(report, log_key.public_bytes))

# --- lightweight monitor: delta updates over a minimized tree ---------------
far = log.last_update_time + 10 * HOUR  # the first batch is long expired
delta = build_delta(log, 0, far)
kinds = [item.kind for b in delta.batches for item in b.items]
print("delta items:", {k: kinds.count(k) for k in sorted(set(kinds))})

light = MinimizedTimeTree(log_key.public_bytes)
light.apply_delta(delta)
print("minimized root equals the log's:", light.root() == log.tree.root())
print("revocation visible to the lightweight monitor:",
      len(light.revocations_for(victim.leaf.cert_hash)) == 1)

# --- vendor bundle: offline validation -------------------------------------
tcrl = build_tcrl(monitor, vendor, now=log.last_update_time)
tcrl = commit_tcrl(log, tcrl)
print("bundle entries:", len(tcrl.entries),
      "| verifies:", verify_tcrl(tcrl, vendor.public_bytes, log_key.public_bytes))

for chain, label in ((victim, "revoked site"), (live_chains[1], "honest site")):
    cc = log.submit_chain(chain)
    out = validate_with_tcrl(
        chain, cc, tcrl, chain.leaf.subject_name, now=log.last_update_time + 60,
        trust_roots=log.config.trust_roots, vendor_pub=vendor.public_bytes,
        log_pub=log_key.public_bytes,
    )
    print(f"offline validation of the {label}: {out.decision}")
