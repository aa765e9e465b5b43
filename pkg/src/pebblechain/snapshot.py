"""Versioned text snapshots of growth and exposure state.

Layout::

    pebblechain-state v1 <provider> <mode> <total_hash_elements>
    phase growing|exposure
    seed <hex>
    counters <exponent> <grow_pebble> <bound_steps>          (growing)
    cursor <current_position> <window> <offset> <value-hex>  (exposure)
    pebble <index> <position> <destination> <start_increment> <dest_increment> <move_increment> <distance_from_seed> <value-hex>
    evidence-log <count>                                     (optional)
    evidence <hex or ->                                      (count lines)
    <grow_value-hex>

Pebbles are written in list order, which is restored as is. Disposed pebbles
and instrumentation counters are not written.
"""

from __future__ import annotations

from typing import Sequence, Union

from .errors import FormatError
from .growth import ExposureHandoff, GrowthState
from .hashing import CombineMode, check_digest, get_provider
from .traversal import Pebble, TraversalState

HEADER = "pebblechain-state"
VERSION = "v1"

Snapshot = Union[GrowthState, ExposureHandoff]


def _pebble_line(p: Pebble) -> str:
    return (
        f"pebble {p.origin_index} {p.position} {p.destination} {p.start_increment} "
        f"{p.dest_increment} {p.move_increment} {p.distance_from_seed} {p.value.hex()}"
    )


def _evidence_lines(evidence: Sequence[bytes | None] | None) -> list[str]:
    if evidence is None:
        return []
    lines = [f"evidence-log {len(evidence)}"]
    lines += [f"evidence {'-' if c is None else c.hex()}" for c in evidence]
    return lines


def dumps(state: Snapshot) -> str:
    if isinstance(state, GrowthState):
        if state.finalized:
            raise FormatError("finalized GrowthState: snapshot its ExposureHandoff instead")
        lines = [
            f"{HEADER} {VERSION} {state.provider} {state.mode.value} {state.total_hash_elements}",
            "phase growing",
            f"seed {state.seed.hex()}",
            f"counters {state.exponent} {state.grow_pebble} {state.bound_steps}",
        ]
        lines += [_pebble_line(p) for p in state.pebbles]
        lines += _evidence_lines(state.evidence_log)
        lines.append(state.grow_value.hex())
    elif isinstance(state, ExposureHandoff):
        t = state.traversal
        lines = [
            f"{HEADER} {VERSION} {t.provider} {t.mode.value} {state.total_hash_elements}",
            "phase exposure",
            f"seed {state.seed.hex()}",
            f"cursor {t.current_position} {t.n} {t.offset} {t.current_value.hex()}",
        ]
        lines += [_pebble_line(p) for p in t.pebbles if not p.disposed]
        lines += _evidence_lines(t.evidence)
        lines.append(state.grow_value.hex())
    else:
        raise TypeError(f"cannot snapshot {type(state).__name__}")
    return "\n".join(lines) + "\n"


def _hex(provider: str, text: str, what: str) -> bytes:
    try:
        value = bytes.fromhex(text)
    except ValueError:
        raise FormatError(f"bad hex in {what}: {text!r}") from None
    try:
        return check_digest(provider, value)
    except ValueError as exc:
        raise FormatError(f"{what}: {exc}") from None


def _ints(fields: list[str], what: str) -> list[int]:
    try:
        return [int(f) for f in fields]
    except ValueError:
        raise FormatError(f"bad integer in {what}: {fields}") from None


def loads(text: str) -> Snapshot:
    lines = text.splitlines()
    if len(lines) < 4:
        raise FormatError("snapshot truncated")
    head = lines[0].split()
    if len(head) != 5 or head[0] != HEADER:
        raise FormatError(f"not a pebblechain snapshot: {lines[0]!r}")
    if head[1] != VERSION:
        raise FormatError(f"unsupported snapshot version {head[1]}")
    provider = get_provider(head[2]).name
    try:
        mode = CombineMode(head[3])
    except ValueError:
        raise FormatError(f"unknown combine mode {head[3]!r}") from None
    (total,) = _ints(head[4:5], "header")

    phase_line = lines[1].split()
    if phase_line[:1] != ["phase"] or len(phase_line) != 2 or phase_line[1] not in ("growing", "exposure"):
        raise FormatError(f"bad phase line {lines[1]!r}")
    phase = phase_line[1]

    seed_line = lines[2].split()
    if len(seed_line) != 2 or seed_line[0] != "seed":
        raise FormatError(f"bad seed line {lines[2]!r}")
    seed = _hex(provider, seed_line[1], "seed")

    pebbles: list[Pebble] = []
    evidence: list[bytes | None] | None = None
    expected_evidence = None
    for line in lines[4:-1]:
        f = line.split()
        if not f:
            raise FormatError("blank line in snapshot")
        if f[0] == "pebble" and len(f) == 9 and evidence is None:
            idx, pos, dest, si, di, mi, dfs = _ints(f[1:8], "pebble")
            pebbles.append(Pebble(pos, dest, si, di, _hex(provider, f[8], "pebble"), mi, dfs, origin_index=idx))
        elif f[0] == "evidence-log" and len(f) == 2 and evidence is None:
            (expected_evidence,) = _ints(f[1:], "evidence-log")
            evidence = []
        elif f[0] == "evidence" and len(f) == 2 and evidence is not None:
            evidence.append(None if f[1] == "-" else _hex(provider, f[1], "evidence"))
        else:
            raise FormatError(f"unexpected snapshot line {line!r}")
    if evidence is not None and len(evidence) != expected_evidence:
        raise FormatError(f"evidence-log declares {expected_evidence} entries, found {len(evidence)}")
    grow_value = _hex(provider, lines[-1].strip(), "grow value")

    third = lines[3].split()
    if phase == "growing":
        if len(third) != 4 or third[0] != "counters":
            raise FormatError(f"bad counters line {lines[3]!r}")
        exponent, grow_pebble, bound = _ints(third[1:], "counters")
        return GrowthState(
            seed=seed,
            grow_value=grow_value,
            provider=provider,
            mode=mode,
            total_hash_elements=total,
            grow_pebble=grow_pebble,
            exponent=exponent,
            pebbles=pebbles,
            evidence_log=evidence,
            max_pebbles=len(pebbles),
            bound_steps=bound,
        )

    if len(third) != 5 or third[0] != "cursor":
        raise FormatError(f"bad cursor line {lines[3]!r}")
    cur, window, offset = _ints(third[1:4], "cursor")
    current_value = _hex(provider, third[4], "cursor")
    pebbles_in_order = list(pebbles)
    traversal = TraversalState(
        n=window,
        current_position=cur,
        current_value=current_value,
        pebbles=pebbles,
        provider=provider,
        mode=mode,
        evidence=None if evidence is None else tuple(evidence),
        offset=offset,
    )
    # keep the persisted order: odd steps move pebbles without re-sorting,
    # and the first pebble must stay first
    traversal.pebbles[:] = pebbles_in_order
    return ExposureHandoff(
        traversal=traversal,
        total_hash_elements=total,
        index_offset=offset,
        sigma=window.bit_length() - 1,
        grow_value=grow_value,
        seed=seed,
    )


def save(state: Snapshot, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps(state))


def load(path) -> Snapshot:
    with open(path, encoding="ascii") as fh:
        return loads(fh.read())
