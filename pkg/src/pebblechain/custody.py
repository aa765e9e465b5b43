"""Digital chain of custody over several provider-parallel hash chains.

Each evidence chunk recorded at a logical tick is compressed per provider and
bound into one growth step of that provider's chain. Closing the session
binds a close marker and finalizes every chain. The chains then disclose
elements one at a time, newest first, and an evidence clerk checks each
disclosed element against the next deeper one and the ledger's evidence.

The ledger holds evidence plaintext, so anyone can recompute ``c(E)``.
Chain elements are only released through :func:`disclose_next`.
"""

from __future__ import annotations

import struct
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from . import snapshot
from .errors import ContractError, ExhaustedError, FormatError, PolicyError, StateError
from .growth import ExposureHandoff, GrowthState, finalize, grow_step, growth_init
from .hashing import DEFAULT_MODE, CombineMode, chain_input, compress, evaluate, get_provider
from .traversal import traversal_step

MIN_PROVIDERS = 3
LEDGER_HEADER = "pebblechain-ledger"
DISCLOSURE_HEADER = "pebblechain-disclosures"
VERSION = "v1"

PASS, FAIL, INCOMPLETE = "pass", "fail", "incomplete"


def bound_payload(tick: int, evidence: bytes) -> bytes:
    """What actually gets compressed for a record: the tick, then the evidence."""
    return struct.pack("<Q", tick) + bytes(evidence)


def close_marker(session_id: str, tick: int) -> bytes:
    return b"CLOSE" + session_id.encode() + struct.pack("<Q", tick)


@dataclass(frozen=True)
class LedgerRecord:
    tick: int
    evidence: bytes
    digests: tuple[tuple[str, bytes], ...]  # (provider, c(tick || evidence)) in session order

    def digest(self, provider: str) -> bytes | None:
        for name, d in self.digests:
            if name == provider:
                return d
        return None


@dataclass(frozen=True)
class Attestation:
    tick: int
    payload: bytes


LedgerEntry = Union[LedgerRecord, Attestation]


@dataclass
class CustodyLedger:
    session_id: str
    entries: list[LedgerEntry] = field(default_factory=list)
    closed: bool = False

    @property
    def records(self) -> list[LedgerRecord]:
        return [e for e in self.entries if isinstance(e, LedgerRecord)]

    @property
    def attestations(self) -> list[Attestation]:
        return [e for e in self.entries if isinstance(e, Attestation)]

    @property
    def last_tick(self) -> int | None:
        recs = self.records
        return recs[-1].tick if recs else None

    @property
    def close_marker(self) -> LedgerRecord | None:
        return self.records[-1] if self.closed else None

    def append(self, entry: LedgerEntry) -> None:
        if self.closed and isinstance(entry, LedgerRecord):
            raise StateError("ledger is closed")
        if isinstance(entry, LedgerRecord):
            last = self.last_tick
            if last is not None and entry.tick <= last:
                raise ContractError(f"tick {entry.tick} is not after {last}")
        self.entries.append(entry)

    def dumps(self) -> str:
        lines = [f"{LEDGER_HEADER} {VERSION} {self.session_id}"]
        for e in self.entries:
            if isinstance(e, Attestation):
                lines.append(f"attest\t{e.tick}\t{e.payload.hex()}")
            else:
                digests = ",".join(f"{name}:{d.hex()}" for name, d in e.digests)
                lines.append(f"{e.tick}\t{e.evidence.hex()}\t{digests}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "CustodyLedger":
        lines = text.splitlines()
        if not lines:
            raise FormatError("empty ledger")
        head = lines[0].split(" ")
        if len(head) != 3 or head[0] != LEDGER_HEADER or head[1] != VERSION:
            raise FormatError(f"not a pebblechain ledger: {lines[0]!r}")
        ledger = cls(head[2])
        for line in lines[1:]:
            f = line.split("\t")
            try:
                if f[0] == "attest" and len(f) == 3:
                    ledger.entries.append(Attestation(int(f[1]), bytes.fromhex(f[2])))
                    continue
                if len(f) != 3:
                    raise ValueError("expected 3 fields")
                digests = []
                for item in f[2].split(","):
                    name, _, hexd = item.partition(":")
                    if not name or not hexd:
                        raise ValueError(f"bad digest item {item!r}")
                    digests.append((name, bytes.fromhex(hexd)))
                ledger.entries.append(LedgerRecord(int(f[0]), bytes.fromhex(f[1]), tuple(digests)))
            except ValueError as exc:
                raise FormatError(f"bad ledger line {line!r}: {exc}") from None
        recs = ledger.records
        if recs and recs[-1].evidence == close_marker(ledger.session_id, recs[-1].tick):
            ledger.closed = True
        return ledger

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "CustodyLedger":
        with open(path, encoding="ascii") as fh:
            return cls.loads(fh.read())


@dataclass
class CustodySession:
    session_id: str
    providers: tuple[str, ...]
    tick_interval: float
    ledger: CustodyLedger
    chains: dict[str, GrowthState]
    mode: CombineMode = DEFAULT_MODE
    phase: str = "growing"
    handoffs: dict[str, ExposureHandoff] = field(default_factory=dict)
    disclosed: dict[str, list[tuple[int, bytes]]] = field(default_factory=dict)
    pending_attestations: list[bytes] = field(default_factory=list)
    below_policy: bool = False  # opened with fewer than MIN_PROVIDERS

    @property
    def total_hash_elements(self) -> int:
        return next(iter(self.chains.values())).total_hash_elements


def session_open(
    providers: Sequence[str],
    seed_material: bytes,
    tick_interval: float = 1.0,
    *,
    session_id: str | None = None,
    mode: CombineMode | str = DEFAULT_MODE,
    allow_fewer: bool = False,
) -> CustodySession:
    names = tuple(get_provider(p).name for p in providers)
    if len(set(names)) != len(names):
        raise ContractError(f"duplicate providers in {names}")
    if not names:
        raise ContractError("need at least one provider")
    below = len(names) < MIN_PROVIDERS
    if below and not allow_fewer:
        raise PolicyError(f"custody needs at least {MIN_PROVIDERS} distinct hash providers, got {len(names)}")
    session_id = session_id or uuid.uuid4().hex
    if not session_id or any(c.isspace() for c in session_id):
        raise ContractError(f"invalid session id {session_id!r}")
    chains = {}
    for name in names:
        seed = compress(name, bytes(seed_material) + name.encode() + session_id.encode())
        chains[name] = growth_init(seed, name, mode)
    return CustodySession(
        session_id=session_id,
        providers=names,
        tick_interval=tick_interval,
        ledger=CustodyLedger(session_id),
        chains=chains,
        mode=CombineMode(mode),
        below_policy=below,
    )


def _append_record(session: CustodySession, tick: int, evidence: bytes) -> dict[str, bytes]:
    last = session.ledger.last_tick
    if last is not None and tick <= last:
        raise ContractError(f"tick {tick} is not after {last}")
    if tick < 0:
        raise ContractError("ticks are non-negative")
    payload = bound_payload(tick, evidence)
    digests = tuple((name, compress(name, payload)) for name in session.providers)
    session.ledger.append(LedgerRecord(tick, bytes(evidence), digests))
    return {name: grow_step(session.chains[name], compressed=d) for name, d in digests}


def record_evidence(session: CustodySession, tick: int, evidence: bytes) -> dict[str, bytes]:
    """Ingest one chunk; every chain grows by one element. Returns the new fronts."""
    if session.phase != "growing":
        raise StateError("session is closed")
    if session.pending_attestations:
        evidence = b"".join(session.pending_attestations) + bytes(evidence)
        session.pending_attestations.clear()
    return _append_record(session, tick, evidence)


def attest_peers(session: CustodySession, tick: int | None = None, payload: bytes | None = None) -> Attestation:
    """Placeholder for device-to-device identification.

    Logs an attestation event. Its bytes are prefixed to the next evidence
    record, so they end up bound into the chains.
    """
    if tick is None:
        tick = session.ledger.last_tick or 0
    if payload is None:
        payload = b"ATTEST:" + ",".join(session.providers).encode()
    event = Attestation(tick, bytes(payload))
    session.ledger.entries.append(event)
    if session.phase == "growing":
        session.pending_attestations.append(event.payload)
    return event


def session_close(session: CustodySession, tick: int | None = None) -> CustodySession:
    if session.phase != "growing":
        raise StateError("session already closed")
    if tick is None:
        last = session.ledger.last_tick
        tick = 0 if last is None else last + 1
    _append_record(session, tick, close_marker(session.session_id, tick))
    session.ledger.closed = True
    records = session.ledger.records
    for name in session.providers:
        evidence = [r.digest(name) for r in records]
        session.handoffs[name] = finalize(session.chains[name], evidence)
        session.disclosed[name] = []
    session.phase = "finalized"
    return session


def disclose_next(session: CustodySession, provider: str) -> tuple[int, bytes]:
    """Release the next deeper element of ``provider``'s chain as (position, digest)."""
    if session.phase != "finalized":
        raise StateError("disclosure starts after the session is closed")
    name = get_provider(provider).name
    if name not in session.handoffs:
        raise ContractError(f"provider {name!r} is not part of session {session.session_id}")
    t = session.handoffs[name].traversal
    if t.exhausted:
        raise ExhaustedError(f"{name} chain fully disclosed")
    digest = traversal_step(t)
    item = (t.emitted, digest)
    session.disclosed[name].append(item)
    return item


def disclose(session: CustodySession, count: int) -> dict[str, list[tuple[int, bytes]]]:
    """``count`` more disclosures from every provider."""
    return {name: [disclose_next(session, name) for _ in range(count)] for name in session.providers}


@dataclass(frozen=True)
class Row:
    position: int
    disclosed: bytes
    recomputed: bytes | None
    verdict: str
    reason: str = ""


@dataclass
class VerificationTranscript:
    session_id: str
    rows: dict[str, list[Row]]
    verdict: str
    disclosure_depth: int
    issues: list[str] = field(default_factory=list)

    def provider_verdict(self, provider: str) -> str:
        return _combine_verdicts(r.verdict for r in self.rows[provider])

    @property
    def flagged(self) -> bool:
        """Providers disagree: some chains verify and others do not."""
        verdicts = {self.provider_verdict(p) for p in self.rows}
        return len(verdicts) > 1

    def first_failure(self, provider: str) -> Row | None:
        return next((r for r in self.rows[provider] if r.verdict != PASS), None)

    def lines(self) -> list[str]:
        """Machine-readable form: one tab-separated line per row plus a verdict line."""
        out = []
        for provider, rows in self.rows.items():
            for r in rows:
                rec = r.recomputed.hex() if r.recomputed is not None else "-"
                out.append(f"row\t{provider}\t{r.position}\t{r.disclosed.hex()}\t{rec}\t{r.verdict}")
        for issue in self.issues:
            out.append(f"issue\t{issue}")
        out.append(f"verdict\t{self.verdict}\t{self.disclosure_depth}\t{'flagged' if self.flagged else 'agreed'}")
        return out

    def table(self) -> str:
        out = [f"session {self.session_id}: {self.verdict.upper()} (depth {self.disclosure_depth})"]
        for provider, rows in self.rows.items():
            out.append(f"  {provider}: {self.provider_verdict(provider)}")
            for r in rows:
                note = f"  {r.reason}" if r.reason else ""
                out.append(f"    {r.position:>6}  {r.disclosed.hex()}  {r.verdict}{note}")
        for issue in self.issues:
            out.append(f"  ! {issue}")
        return "\n".join(out)


def _combine_verdicts(verdicts: Iterable[str]) -> str:
    seen = set(verdicts)
    if INCOMPLETE in seen:
        return INCOMPLETE
    if FAIL in seen:
        return FAIL
    return PASS


def verify_disclosures(
    session: CustodySession,
    ledger: CustodyLedger,
    disclosures: Mapping[str, Sequence[tuple[int, bytes]]],
) -> VerificationTranscript:
    """Check every disclosed element against the next deeper one.

    Row ``q`` recomputes position ``q`` from the disclosed element at ``q + 1``
    and that step's ledger record, so ``m`` disclosures verify ``m - 1`` rows.
    Records are matched from the newest end: the close marker belongs to row 1.
    Missing records give an ``incomplete`` verdict, which outranks ``fail``.
    """
    total = session.total_hash_elements
    records = ledger.records
    issues = []
    if ledger.session_id != session.session_id:
        issues.append(f"ledger belongs to session {ledger.session_id}, not {session.session_id}")
    if any(b.tick <= a.tick for a, b in zip(records, records[1:])):
        issues.append("ledger ticks are not strictly increasing")
    if len(records) > total - 1:
        issues.append(f"ledger has {len(records)} records for {total - 1} chain steps")
    missing = len(records) < total - 1

    rows: dict[str, list[Row]] = {}
    depth = None
    for provider in session.providers:
        items = sorted(disclosures.get(provider, ()), key=lambda x: x[0])
        positions = [q for q, _ in items]
        if positions != list(range(1, len(items) + 1)):
            raise ContractError(f"{provider}: disclosures must be positions 1..m, got {positions[:8]}...")
        values = [bytes(d) for _, d in items]
        prow = []
        for q in range(1, len(values)):
            deeper = values[q]  # position q + 1
            back = q  # row q uses the q-th record counted from the newest
            if back > len(records):
                prow.append(Row(q, values[q - 1], None, INCOMPLETE, "no ledger record"))
                continue
            rec = records[len(records) - back]
            c = compress(provider, bound_payload(rec.tick, rec.evidence))
            recomputed = evaluate(provider, chain_input(deeper, c, session.mode))
            stored = rec.digest(provider)
            if stored != c:
                prow.append(Row(q, values[q - 1], recomputed, FAIL, f"ledger digest mismatch at tick {rec.tick}"))
            elif recomputed != values[q - 1]:
                prow.append(Row(q, values[q - 1], recomputed, FAIL, f"chain link broken at tick {rec.tick}"))
            else:
                prow.append(Row(q, values[q - 1], recomputed, PASS))
        rows[provider] = prow
        depth = len(prow) if depth is None else min(depth, len(prow))

    verdict = _combine_verdicts(r.verdict for rs in rows.values() for r in rs)
    if verdict == PASS and issues:
        verdict = FAIL
    if missing and verdict != PASS:
        verdict = INCOMPLETE
    return VerificationTranscript(session.session_id, rows, verdict, depth or 0, issues)


def dump_disclosures(session_id: str, disclosures: Mapping[str, Sequence[tuple[int, bytes]]]) -> str:
    lines = [f"{DISCLOSURE_HEADER} {VERSION} {session_id}"]
    for provider, items in disclosures.items():
        lines += [f"{provider}\t{q}\t{d.hex()}" for q, d in items]
    return "\n".join(lines) + "\n"


def load_disclosures(text: str) -> tuple[str, dict[str, list[tuple[int, bytes]]]]:
    lines = text.splitlines()
    head = lines[0].split(" ") if lines else []
    if len(head) != 3 or head[0] != DISCLOSURE_HEADER or head[1] != VERSION:
        raise FormatError("not a pebblechain disclosure file")
    out: dict[str, list[tuple[int, bytes]]] = {}
    for line in lines[1:]:
        f = line.split("\t")
        try:
            if len(f) != 3:
                raise ValueError("expected 3 fields")
            out.setdefault(f[0], []).append((int(f[1]), bytes.fromhex(f[2])))
        except ValueError as exc:
            raise FormatError(f"bad disclosure line {line!r}: {exc}") from None
    return head[2], out


SESSION_HEADER = "pebblechain-session"


def save_session(session: CustodySession, directory) -> None:
    """Write a session as plain files: session.txt, ledger.txt, one snapshot per
    provider chain and, once closed, disclosures.txt."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{SESSION_HEADER} {VERSION} {session.session_id}",
        f"providers {','.join(session.providers)}",
        f"mode {session.mode.value}",
        f"tick-interval {session.tick_interval!r}",
        f"phase {session.phase}",
        f"below-policy {int(session.below_policy)}",
    ]
    lines += [f"pending {p.hex()}" for p in session.pending_attestations]
    (d / "session.txt").write_text("\n".join(lines) + "\n", encoding="ascii")
    session.ledger.save(d / "ledger.txt")
    for name in session.providers:
        state = session.handoffs[name] if session.phase == "finalized" else session.chains[name]
        snapshot.save(state, d / f"chain-{name}.state")
    if session.phase == "finalized":
        (d / "disclosures.txt").write_text(dump_disclosures(session.session_id, session.disclosed), encoding="ascii")


def load_session(directory) -> CustodySession:
    d = Path(directory)
    lines = (d / "session.txt").read_text(encoding="ascii").splitlines()
    head = lines[0].split(" ") if lines else []
    if len(head) != 3 or head[0] != SESSION_HEADER or head[1] != VERSION:
        raise FormatError(f"not a pebblechain session: {d}")
    fields: dict[str, str] = {}
    pending = []
    for line in lines[1:]:
        key, _, value = line.partition(" ")
        if key == "pending":
            pending.append(bytes.fromhex(value))
        else:
            fields[key] = value
    try:
        providers = tuple(fields["providers"].split(","))
        phase = fields["phase"]
        session = CustodySession(
            session_id=head[2],
            providers=providers,
            tick_interval=float(fields["tick-interval"]),
            ledger=CustodyLedger.load(d / "ledger.txt"),
            chains={},
            mode=CombineMode(fields["mode"]),
            phase=phase,
            pending_attestations=pending,
            below_policy=fields["below-policy"] == "1",
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad session file in {d}: {exc}") from None
    for name in providers:
        state = snapshot.load(d / f"chain-{name}.state")
        if phase == "finalized":
            if not isinstance(state, ExposureHandoff):
                raise FormatError(f"{name}: expected an exposure snapshot")
            session.handoffs[name] = state
            session.chains[name] = _closed_placeholder(state)
        else:
            if not isinstance(state, GrowthState):
                raise FormatError(f"{name}: expected a growth snapshot")
            session.chains[name] = state
    if phase == "finalized":
        _, disclosed = load_disclosures((d / "disclosures.txt").read_text(encoding="ascii"))
        session.disclosed = {name: disclosed.get(name, []) for name in providers}
    return session


def _closed_placeholder(handoff: ExposureHandoff) -> GrowthState:
    # a finalized chain only needs to answer total_hash_elements and seed
    t = handoff.traversal
    return GrowthState(
        seed=handoff.seed,
        grow_value=handoff.grow_value,
        provider=t.provider,
        mode=t.mode,
        total_hash_elements=handoff.total_hash_elements,
        finalized=True,
    )
