"""
Chain of custody and tamper detection
=====================================

A custody session grows one chain per provider over the same evidence
stream. Once closed, the chains are disclosed front to seed, and a verifier
recomputes each row against the ledger.
"""

# %%
from pebblechain import custody

session = custody.session_open(["mix64-test", "sha1", "sha256"], b"case-42", session_id="case-42")
for tick, chunk in enumerate([b"intake photo", b"lab report", b"transfer slip"], start=1):
    custody.record_evidence(session, tick, chunk)
custody.session_close(session)
disclosures = custody.disclose(session, session.total_hash_elements)
report = custody.verify_disclosures(session, session.ledger, disclosures)
print(report.table())

# %%
# Change one byte of evidence in the ledger. Every provider fails at the row
# that checks that record.
ledger = custody.CustodyLedger.loads(session.ledger.dumps())
rec = ledger.entries[1]
ledger.entries[1] = custody.LedgerRecord(rec.tick, b"lab rep0rt", rec.digests)
report = custody.verify_disclosures(session, ledger, disclosures)
print(report.table())
assert report.verdict == custody.FAIL
