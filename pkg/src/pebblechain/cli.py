"""``pebblechain`` command line.

Exit codes: 0 ok, 2 usage or state error, 3 chain exhausted, 4 tamper,
5 incomplete evidence.
"""

from __future__ import annotations

import argparse
import contextlib
import fcntl
import os
import struct
import sys
import time
from pathlib import Path
from typing import BinaryIO, Iterator, Sequence

from . import custody, snapshot
from .errors import ExhaustedError, PebbleChainError
from .growth import ExposureHandoff, GrowthState, finalize, grow_step, growth_init
from .hashing import DEFAULT_MODE, TEST_PROVIDER, CombineMode, evaluate, get_provider, registry
from .oracle import build_chain, dump
from .traversal import TraversalState, jakobsson_setup, traversal_step

EXIT_OK, EXIT_USAGE, EXIT_EXHAUSTED, EXIT_TAMPER, EXIT_INCOMPLETE = 0, 2, 3, 4, 5
STATE_DIR_ENV = "PEBBLECHAIN_STATE_DIR"
SLOT_LIMIT = 64  # widest chain drawn one character per slot
FRAME = struct.Struct(">I")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def state_dir(args) -> Path:
    d = Path(os.environ.get(STATE_DIR_ENV) or args.state_dir)
    if not d.is_dir() or not os.access(d, os.W_OK):
        raise CliError(f"state directory {d} does not exist or is not writable")
    return d


@contextlib.contextmanager
def locked(path: Path) -> Iterator[None]:
    """Exclusive lock on ``path`` for the duration of a mutating command."""
    with open(path.with_name(path.name + ".lock"), "a") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def _seed(provider: str, text: str) -> bytes:
    try:
        seed = bytes.fromhex(text)
    except ValueError:
        raise CliError(f"seed is not hex: {text!r}") from None
    width = get_provider(provider).width
    if len(seed) != width:
        raise CliError(f"seed must be {width} bytes for {provider}, got {len(seed)}")
    return seed


def default_seed(provider: str) -> bytes:
    return evaluate(provider, b"pebblechain")


def evidence_files(paths: Sequence[str]) -> list[bytes]:
    """Evidence chunks, one per file; a directory contributes its files in lexicographic order."""
    files: list[Path] = []
    for p in map(Path, paths):
        files += sorted(f for f in p.iterdir() if f.is_file()) if p.is_dir() else [p]
    return [f.read_bytes() for f in files]


def read_frames(stream: BinaryIO) -> list[bytes]:
    """Length-prefixed chunks: a 4-byte big-endian length, then that many bytes."""
    chunks = []
    while True:
        head = stream.read(FRAME.size)
        if not head:
            return chunks
        if len(head) != FRAME.size:
            raise CliError("truncated frame header on stdin")
        (size,) = FRAME.unpack(head)
        body = stream.read(size)
        if len(body) != size:
            raise CliError("truncated frame on stdin")
        chunks.append(body)


def write_frames(chunks: Sequence[bytes]) -> bytes:
    return b"".join(FRAME.pack(len(c)) + c for c in chunks)


# chain commands ------------------------------------------------------------


def cmd_grow(args, out) -> int:
    d = state_dir(args)
    seed = _seed(args.provider, args.seed)
    chunks = evidence_files(args.evidence_file) if args.evidence_file else None
    steps = args.steps
    if chunks is not None:
        if steps is None:
            steps = len(chunks)
        elif steps != len(chunks):
            raise CliError(f"--steps {steps} but {len(chunks)} evidence chunks")
    if steps is None or steps < 0:
        raise CliError("--steps must be given and non-negative")
    state = growth_init(seed, args.provider, args.combine, keep_evidence=chunks is not None)
    for i in range(steps):
        grow_step(state, chunks[i] if chunks else None)
    target = d / args.out
    with locked(target):
        snapshot.save(state, target)
    print(f"total {state.total_hash_elements} pebbles {len(state.pebbles)}", file=out)
    return EXIT_OK


def _load(path: Path):
    try:
        return snapshot.load(path)
    except FileNotFoundError:
        raise CliError(f"no snapshot at {path}") from None


def cmd_finalize(args, out) -> int:
    path = state_dir(args) / args.state
    with locked(path):
        state = _load(path)
        if not isinstance(state, GrowthState):
            raise CliError("snapshot is already in the exposure phase")
        handoff = finalize(state)
        snapshot.save(handoff, path)
    print(f"total {handoff.total_hash_elements} pebbles {len(handoff.traversal.pebbles)}", file=out)
    return EXIT_OK


def cmd_emit(args, out) -> int:
    path = state_dir(args) / args.state
    with locked(path):
        state = _load(path)
        if not isinstance(state, ExposureHandoff):
            raise CliError("snapshot is still growing; run finalize first")
        if args.count == 0:
            return EXIT_OK
        t = state.traversal
        try:
            for _ in range(args.count):
                print(traversal_step(t).hex(), file=out)
        finally:
            snapshot.save(state, path)
    return EXIT_OK


def cmd_oracle(args, out) -> int:
    provider = args.provider
    seed = _seed(provider, args.seed) if args.seed else default_seed(provider)
    out.write(dump(build_chain(provider, seed, args.n, mode=args.combine)))
    return EXIT_OK


# traces --------------------------------------------------------------------


def _slots(n: int, marks: dict[int, str]) -> str:
    if n <= SLOT_LIMIT:
        return "".join(marks.get(q, ".") for q in range(1, n + 1))
    return ",".join(f"{q}{m}" for q, m in sorted(marks.items())) or "-"


def _row(label, n: int, marks: dict[int, str], note: str = "") -> str:
    return f"{label!s:>6}  {_slots(n, marks)}  {note or '-'}"


def _ready(n: int, provider: str, seed: bytes, mode) -> TraversalState:
    # powers of two use Jakobsson's setup; other lengths the grown-and-finalized frontier
    if n & (n - 1) == 0:
        return jakobsson_setup(build_chain(provider, seed, n, mode=mode))
    g = growth_init(seed, provider, mode)
    for _ in range(n - 1):
        grow_step(g)
    return finalize(g).traversal


def trace_setup(n: int, provider: str, seed: bytes, mode=DEFAULT_MODE) -> list[str]:
    return [_row("setup", n, _traversal_marks(_ready(n, provider, seed, mode)))]


def trace_run(n: int, provider: str, seed: bytes, mode=DEFAULT_MODE) -> list[str]:
    """One row per emission: ``*`` emitted slot, ``o`` live pebbles, disposals on the right."""
    state = _ready(n, provider, seed, mode)
    rows = [_row("setup", n, _traversal_marks(state))]
    while not state.exhausted:
        traversal_step(state)
        cur = state.current_position
        marks = _traversal_marks(state)
        marks[state.emitted] = "*"
        gone = ",".join(f"p{origin}" for step, origin in state.disposals if step == cur)
        rows.append(_row(state.emitted, n, marks, f"dispose {gone}" if gone else ""))
    return rows


def _traversal_marks(state: TraversalState) -> dict[int, str]:
    return {state.exposure_position(p.position): "o" for p in state.live}


def trace_grow(n: int, provider: str, seed: bytes, mode=DEFAULT_MODE) -> list[str]:
    """One row per growth step, pebbles drawn by distance from the front; then the finalized frontier."""
    g = growth_init(seed, provider, mode)
    rows = []
    for _ in range(n - 1):
        grow_step(g)
        total = g.total_hash_elements
        marks = {total - p.distance_from_seed: "o" for p in g.pebbles}
        rows.append(_row(total, n, marks, f"{len(g.pebbles)} pebbles"))
    handoff = finalize(g)
    t = handoff.traversal
    rows.append(_row("final", n, _traversal_marks(t), f"{t.live_count} pebbles"))
    return rows


TRACES = {"setup": trace_setup, "run": trace_run, "grow": trace_grow}


def cmd_trace(args, out) -> int:
    if args.n < 2:
        raise CliError("--n must be at least 2")
    seed = _seed(args.provider, args.seed) if args.seed else default_seed(args.provider)
    for line in TRACES[args.mode](args.n, args.provider, seed, args.combine):
        print(line, file=out)
    return EXIT_OK


# custody commands ----------------------------------------------------------


def _session_path(args) -> Path:
    return state_dir(args) / args.session


def _load_session(path: Path) -> custody.CustodySession:
    if not (path / "session.txt").exists():
        raise CliError(f"no session at {path}")
    return custody.load_session(path)


def cmd_open(args, out) -> int:
    path = _session_path(args)
    if path.exists():
        raise CliError(f"session {args.session} already exists")
    providers = args.providers.split(",")
    try:
        material = bytes.fromhex(args.seed_material)
    except ValueError:
        raise CliError("--seed-material must be hex") from None
    session = custody.session_open(
        providers,
        material,
        args.tick_interval,
        session_id=args.session,
        mode=args.combine,
        allow_fewer=args.allow_fewer,
    )
    custody.save_session(session, path)
    if session.below_policy:
        print(f"warning: only {len(providers)} providers; custody practice asks for {custody.MIN_PROVIDERS}", file=sys.stderr)
    print(f"opened {session.session_id} with {','.join(session.providers)}", file=out)
    return EXIT_OK


def _next_tick(session: custody.CustodySession, args) -> int:
    last = session.ledger.last_tick
    if args.tick is not None:
        return args.tick
    if args.clock:
        tick = int(time.time() / session.tick_interval)
        if last is not None and tick <= last:
            raise CliError(f"clock tick {tick} is not after {last}")
        return tick
    return 0 if last is None else last + 1


def cmd_record(args, out) -> int:
    path = _session_path(args)
    with locked(path / "session.txt"):
        session = _load_session(path)
        chunks = evidence_files(args.files) if args.files else read_frames(sys.stdin.buffer)
        for i, chunk in enumerate(chunks):
            tick = _next_tick(session, args) if i == 0 else session.ledger.last_tick + 1
            custody.record_evidence(session, tick, chunk)
        custody.save_session(session, path)
    print(f"recorded {len(chunks)} chunks; total {session.total_hash_elements}", file=out)
    return EXIT_OK


def cmd_attest(args, out) -> int:
    path = _session_path(args)
    with locked(path / "session.txt"):
        session = _load_session(path)
        event = custody.attest_peers(session)
        custody.save_session(session, path)
    print(f"attest {event.tick} {event.payload.hex()}", file=out)
    return EXIT_OK


def cmd_close(args, out) -> int:
    path = _session_path(args)
    with locked(path / "session.txt"):
        session = _load_session(path)
        custody.session_close(session, args.tick)
        custody.save_session(session, path)
    print(f"closed {session.session_id}; total {session.total_hash_elements}", file=out)
    return EXIT_OK


def cmd_disclose(args, out) -> int:
    path = _session_path(args)
    with locked(path / "session.txt"):
        session = _load_session(path)
        count = args.count
        if args.all:
            count = session.total_hash_elements - len(session.disclosed[session.providers[0]])
        try:
            for _ in range(count):
                for name in session.providers:
                    q, digest = custody.disclose_next(session, name)
                    print(f"{name}\t{q}\t{digest.hex()}", file=out)
        finally:
            custody.save_session(session, path)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    path = _session_path(args)
    session = _load_session(path)
    ledger = custody.CustodyLedger.load(Path(args.ledger) if args.ledger else path / "ledger.txt")
    disclosure_file = Path(args.disclosures) if args.disclosures else path / "disclosures.txt"
    _, disclosures = custody.load_disclosures(disclosure_file.read_text(encoding="ascii"))
    transcript = custody.verify_disclosures(session, ledger, disclosures)
    print(transcript.table(), file=out)
    if args.lines:
        print("\n".join(transcript.lines()), file=out)
    return {custody.PASS: EXIT_OK, custody.FAIL: EXIT_TAMPER, custody.INCOMPLETE: EXIT_INCOMPLETE}[transcript.verdict]


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pebblechain", description=__doc__.splitlines()[0])
    parser.add_argument("--state-dir", default=".", help=f"where state lives (env {STATE_DIR_ENV} wins)")
    parser.add_argument("--provider", default=TEST_PROVIDER, choices=registry.names())
    parser.add_argument("--combine", default=DEFAULT_MODE.value, choices=[m.value for m in CombineMode])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grow", help="grow a chain and write a snapshot")
    p.add_argument("--seed", required=True, help="seed digest, hex")
    p.add_argument("--steps", type=int)
    p.add_argument("--evidence-file", action="append", help="one chunk per file; directories expand sorted")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grow)

    p = sub.add_parser("finalize", help="switch a grown snapshot to the exposure phase")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_finalize)

    p = sub.add_parser("emit", help="disclose the next elements of a finalized snapshot")
    p.add_argument("--state", required=True)
    p.add_argument("--count", type=int, default=1)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("oracle", help="dump a brute-force chain in exposure order")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("trace", help="print pebble placements as text rows")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=sorted(TRACES), default="setup")
    p.add_argument("--seed")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("open", help="open a custody session")
    p.add_argument("--session", required=True)
    p.add_argument("--providers", required=True, help="comma separated")
    p.add_argument("--seed-material", required=True, help="hex")
    p.add_argument("--tick-interval", type=float, default=1.0)
    p.add_argument("--allow-fewer", action="store_true", help="accept fewer than three providers")
    p.set_defaults(func=cmd_open)

    p = sub.add_parser("record", help="append evidence chunks from files or length-prefixed stdin")
    p.add_argument("--session", required=True)
    p.add_argument("--tick", type=int, help="tick of the first chunk (default: last tick + 1)")
    p.add_argument("--clock", action="store_true", help="derive the tick from wall-clock time")
    p.add_argument("files", nargs="*")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("attest", help="log a peer attestation placeholder")
    p.add_argument("--session", required=True)
    p.set_defaults(func=cmd_attest)

    p = sub.add_parser("close", help="bind the close marker and finalize every chain")
    p.add_argument("--session", required=True)
    p.add_argument("--tick", type=int)
    p.set_defaults(func=cmd_close)

    p = sub.add_parser("disclose", help="release the next elements of every provider chain")
    p.add_argument("--session", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--all", action="store_true")
    p.set_defaults(func=cmd_disclose)

    p = sub.add_parser("verify", help="run the evidence clerk over a ledger and disclosures")
    p.add_argument("--session", required=True)
    p.add_argument("--ledger")
    p.add_argument("--disclosures")
    p.add_argument("--lines", action="store_true", help="also print the machine-readable transcript")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except ExhaustedError as exc:
        print(f"pebblechain: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except CliError as exc:
        print(f"pebblechain: {exc}", file=sys.stderr)
        return exc.code
    except (PebbleChainError, OSError) as exc:
        print(f"pebblechain: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
