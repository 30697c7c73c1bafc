"""Append-only event log: the system's durability and interchange contract.

Every proposal insertion, exhibition, and vote is one UTF-8 line holding a
self-contained JSON object. Tallies are never stored; they are replayed
from the log, which is what lets fraud review recompute rankings with
flagged IPs excluded without a second storage system. One writer
serializes appends; readers only ever see immutable prefixes.

Schema 1 line fields, in this order, absent ones omitted:
``{"seq", "kind", "proposal_id", "vote", "text", "session", "ip", "ts",
"schema": 1}``. ``ts`` is ISO-8601 UTC with millisecond precision.
Unknown fields are rejected. The encoding must stay bit-stable across
versions.
"""

from __future__ import annotations

import ipaddress
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Sequence

from .indexes import Tally, VoteKind

__all__ = [
    "AnomalyFlag",
    "AnomalyPolicy",
    "CorruptRecordError",
    "EventKind",
    "Ledger",
    "decode_event",
    "encode_event",
    "LedgerEvent",
    "PrecedenceError",
    "flag_anomalies",
    "now_utc_ms",
    "read_events",
    "redact_ip",
    "replay",
    "write_events",
]

SCHEMA_VERSION = 1
_FIELD_ORDER = ("seq", "kind", "proposal_id", "vote", "text", "session", "ip", "ts", "schema")
_ALLOWED_FIELDS = frozenset(_FIELD_ORDER)

RATE_RULE = "rate_per_minute"
DUPLICATE_RULE = "votes_per_proposal"
_WINDOW_SECONDS = 60.0


class PrecedenceError(ValueError):
    """A vote was appended with no outstanding exhibition to answer."""


class CorruptRecordError(ValueError):
    """A log record failed validation; ``seq`` locates the first bad one."""

    def __init__(self, seq: int, reason: str):
        super().__init__(f"corrupt ledger record at seq {seq}: {reason}")
        self.seq = seq
        self.reason = reason


class EventKind(str, Enum):
    PROPOSAL_ADDED = "proposal_added"
    EXHIBITED = "exhibited"
    VOTE_CAST = "vote_cast"


def now_utc_ms() -> datetime:
    """Current UTC instant truncated to the log's millisecond precision."""
    now = datetime.now(timezone.utc)
    return now.replace(microsecond=(now.microsecond // 1000) * 1000)


@dataclass(frozen=True)
class LedgerEvent:
    """One appended fact. ``seq=0`` marks an event not yet appended."""

    seq: int
    kind: EventKind
    session_id: str
    ip: str
    timestamp: datetime
    proposal_id: str | None = None
    vote: VoteKind | None = None
    text: str | None = None

    @staticmethod
    def proposal_added(
        proposal_id: str, text: str, session_id: str, ip: str, timestamp: datetime
    ) -> "LedgerEvent":
        return LedgerEvent(
            seq=0,
            kind=EventKind.PROPOSAL_ADDED,
            session_id=session_id,
            ip=ip,
            timestamp=timestamp,
            proposal_id=proposal_id,
            text=text,
        )

    @staticmethod
    def exhibited(
        proposal_id: str, session_id: str, ip: str, timestamp: datetime
    ) -> "LedgerEvent":
        return LedgerEvent(
            seq=0,
            kind=EventKind.EXHIBITED,
            session_id=session_id,
            ip=ip,
            timestamp=timestamp,
            proposal_id=proposal_id,
        )

    @staticmethod
    def vote_cast(
        proposal_id: str, vote: VoteKind, session_id: str, ip: str, timestamp: datetime
    ) -> "LedgerEvent":
        return LedgerEvent(
            seq=0,
            kind=EventKind.VOTE_CAST,
            session_id=session_id,
            ip=ip,
            timestamp=timestamp,
            proposal_id=proposal_id,
            vote=vote,
        )


def _format_ts(dt: datetime) -> str:
    if dt.tzinfo is None or dt.utcoffset() != timezone.utc.utcoffset(None):
        raise ValueError(f"timestamps must be UTC-aware, got {dt!r}")
    if dt.microsecond % 1000 != 0:
        raise ValueError(f"timestamps carry millisecond precision only, got {dt!r}")
    return f"{dt:%Y-%m-%dT%H:%M:%S}.{dt.microsecond // 1000:03d}Z"


def _parse_ts(raw: str) -> datetime:
    if not (raw.endswith("Z") and len(raw) == 24 and raw[19] == "."):
        raise ValueError(f"bad timestamp {raw!r}, want YYYY-MM-DDTHH:MM:SS.mmmZ")
    base = datetime.strptime(raw[:19], "%Y-%m-%dT%H:%M:%S")
    millis = int(raw[20:23])
    return base.replace(microsecond=millis * 1000, tzinfo=timezone.utc)


def encode_event(event: LedgerEvent) -> str:
    """One canonical JSON line, no trailing newline."""
    fields: dict[str, object] = {
        "seq": event.seq,
        "kind": event.kind.value,
        "session": event.session_id,
        "ip": event.ip,
        "ts": _format_ts(event.timestamp),
        "schema": SCHEMA_VERSION,
    }
    if event.proposal_id is not None:
        fields["proposal_id"] = event.proposal_id
    if event.vote is not None:
        fields["vote"] = event.vote.value
    if event.text is not None:
        fields["text"] = event.text
    ordered = {k: fields[k] for k in _FIELD_ORDER if k in fields}
    return json.dumps(ordered, ensure_ascii=False, separators=(",", ":"))


def _require(condition: bool, seq: int, reason: str) -> None:
    if not condition:
        raise CorruptRecordError(seq, reason)


def decode_event(line: str, fallback_seq: int) -> LedgerEvent:
    """Parse and validate one log line under schema 1."""
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptRecordError(fallback_seq, f"not valid JSON ({exc})") from exc
    _require(isinstance(raw, dict), fallback_seq, "record is not a JSON object")
    seq = raw.get("seq", fallback_seq)
    if not isinstance(seq, int) or isinstance(seq, bool) or seq < 1:
        raise CorruptRecordError(fallback_seq, f"bad seq {raw.get('seq')!r}")
    unknown = set(raw) - _ALLOWED_FIELDS
    _require(not unknown, seq, f"unknown fields {sorted(unknown)}")
    _require(raw.get("schema") == SCHEMA_VERSION, seq, f"unsupported schema {raw.get('schema')!r}")
    for key in ("session", "ip", "ts"):
        _require(isinstance(raw.get(key), str), seq, f"missing or non-string {key!r}")
    try:
        kind = EventKind(raw.get("kind"))
    except ValueError:
        raise CorruptRecordError(seq, f"unknown kind {raw.get('kind')!r}") from None
    try:
        ts = _parse_ts(raw["ts"])
    except ValueError as exc:
        raise CorruptRecordError(seq, str(exc)) from exc

    proposal_id = raw.get("proposal_id")
    vote_raw = raw.get("vote")
    text = raw.get("text")
    _require(isinstance(proposal_id, str), seq, "missing proposal_id")
    if kind is EventKind.PROPOSAL_ADDED:
        _require(isinstance(text, str), seq, "proposal_added requires text")
        _require(vote_raw is None, seq, "proposal_added carries no vote")
    elif kind is EventKind.EXHIBITED:
        _require(text is None and vote_raw is None, seq, "exhibited carries no vote or text")
    else:
        _require(text is None, seq, "vote_cast carries no text")
        try:
            vote_raw = VoteKind(vote_raw)
        except ValueError:
            raise CorruptRecordError(seq, f"unknown vote {vote_raw!r}") from None

    return LedgerEvent(
        seq=seq,
        kind=kind,
        session_id=raw["session"],
        ip=raw["ip"],
        timestamp=ts,
        proposal_id=proposal_id,
        vote=vote_raw if isinstance(vote_raw, VoteKind) else None,
        text=text,
    )


class _LogState:
    """Referential-integrity and precedence state maintained while appending."""

    def __init__(self) -> None:
        self.known_proposals: set[str] = set()
        self.pending: dict[tuple[str, str], int] = {}

    def admit(self, event: LedgerEvent, seq: int, *, corrupt: bool) -> None:
        def fail(reason: str):
            if corrupt:
                raise CorruptRecordError(seq, reason)
            raise PrecedenceError(reason)

        if event.kind is EventKind.PROPOSAL_ADDED:
            if event.proposal_id in self.known_proposals:
                fail(f"proposal {event.proposal_id!r} added twice")
            self.known_proposals.add(event.proposal_id)
            return
        if event.proposal_id not in self.known_proposals:
            fail(f"unknown proposal {event.proposal_id!r}")
        key = (event.session_id, event.proposal_id)
        if event.kind is EventKind.EXHIBITED:
            self.pending[key] = self.pending.get(key, 0) + 1
            return
        outstanding = self.pending.get(key, 0)
        if outstanding < 1:
            fail(
                f"vote by session {event.session_id!r} on {event.proposal_id!r} "
                "has no outstanding exhibition"
            )
        self.pending[key] = outstanding - 1

    def outstanding(self, session_id: str, proposal_id: str) -> int:
        return self.pending.get((session_id, proposal_id), 0)


class Ledger:
    """Serialized append access to one log, in memory or backed by a file.

    ``append`` validates, assigns the next gap-free seq, and (for
    file-backed ledgers) flushes the line to the OS before returning;
    pass ``fsync=True`` to also force it to disk per append. Storage
    errors propagate to the caller, never silently dropping an event.
    """

    def __init__(self, path: str | Path | None = None, *, fsync: bool = False):
        self._path = Path(path) if path is not None else None
        self._fsync = fsync
        self._events: list[LedgerEvent] = []
        self._state = _LogState()
        self._fh: IO[str] | None = None
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            if self._path.exists():
                for event in read_events(self._path):
                    self._events.append(event)
                    self._state.admit(event, event.seq, corrupt=True)
            self._fh = open(self._path, "a", encoding="utf-8", newline="\n")

    @property
    def path(self) -> Path | None:
        return self._path

    def __len__(self) -> int:
        return len(self._events)

    def append(self, event: LedgerEvent) -> int:
        """Validate, persist, and return the assigned sequence number."""
        seq = len(self._events) + 1
        self._state.admit(event, seq, corrupt=False)
        stored = LedgerEvent(
            seq=seq,
            kind=event.kind,
            session_id=event.session_id,
            ip=event.ip,
            timestamp=event.timestamp,
            proposal_id=event.proposal_id,
            vote=event.vote,
            text=event.text,
        )
        if self._fh is not None:
            self._fh.write(encode_event(stored) + "\n")
            self._fh.flush()
            if self._fsync:
                os.fsync(self._fh.fileno())
        self._events.append(stored)
        return seq

    def events(self) -> list[LedgerEvent]:
        """A snapshot copy of the whole log."""
        return list(self._events)

    def outstanding_exhibitions(self, session_id: str, proposal_id: str) -> int:
        """Exhibitions this session has not answered yet for this proposal."""
        return self._state.outstanding(session_id, proposal_id)

    def known_proposals(self) -> set[str]:
        return set(self._state.known_proposals)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "Ledger":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_events(path: str | Path) -> list[LedgerEvent]:
    """Load and fully validate a log file.

    Enforces the line schema, gap-free ascending seq, referential
    integrity, and the vote-after-exhibition precedence rule; the first
    offending record aborts the read with its seq.
    """
    events: list[LedgerEvent] = []
    state = _LogState()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                raise CorruptRecordError(lineno, "blank line in log")
            event = decode_event(line, fallback_seq=lineno)
            if event.seq != lineno:
                raise CorruptRecordError(event.seq, f"expected seq {lineno}, found {event.seq}")
            state.admit(event, event.seq, corrupt=True)
            events.append(event)
    return events


def write_events(path: str | Path, events: Iterable[LedgerEvent]) -> None:
    """Serialize events to a log file, canonical encoding, one per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for event in events:
            fh.write(encode_event(event) + "\n")


def replay(
    events: Iterable[LedgerEvent], *, exclude_ips: frozenset[str] | set[str] = frozenset()
) -> dict[str, Tally]:
    """Derive every proposal's tally from the log alone.

    Exhibitions count toward eta, approve/disapprove votes toward their
    counters; explicit indifferent votes change nothing (their exhibition
    was already counted). ``exclude_ips`` drops those IPs' votes but keeps
    their exhibitions, so an excluded bot biases its targets toward
    indifference instead of rewriting history.
    """
    counters: dict[str, list[int]] = {}
    for event in events:
        pid = event.proposal_id
        if event.kind is EventKind.PROPOSAL_ADDED:
            counters.setdefault(pid, [0, 0, 0])
        elif event.kind is EventKind.EXHIBITED:
            counters.setdefault(pid, [0, 0, 0])[2] += 1
        else:
            if event.ip in exclude_ips:
                continue
            c = counters.setdefault(pid, [0, 0, 0])
            if event.vote is VoteKind.APPROVE:
                c[0] += 1
            elif event.vote is VoteKind.DISAPPROVE:
                c[1] += 1
    return {
        pid: Tally(proposal_id=pid, v_plus=c[0], v_minus=c[1], eta=c[2])
        for pid, c in counters.items()
    }


@dataclass(frozen=True)
class AnomalyPolicy:
    """Configurable limits for the vote-fraud heuristics."""

    max_votes_per_ip_per_minute: int = 30
    max_votes_per_ip_per_proposal: int = 3

    def __post_init__(self) -> None:
        if self.max_votes_per_ip_per_minute < 1 or self.max_votes_per_ip_per_proposal < 1:
            raise ValueError("anomaly policy limits must be at least 1")


@dataclass(frozen=True)
class AnomalyFlag:
    """One triggered heuristic. Flags annotate; tallies are never touched.

    ``observed_rate`` is votes per minute for the rate rule and the plain
    vote count for the per-proposal rule; either way it exceeds the
    triggering rule's limit.
    """

    ip: str
    window_start: datetime
    window_end: datetime
    observed_rate: float
    rule: str
    affected_proposals: tuple[str, ...]


def flag_anomalies(
    events: Iterable[LedgerEvent], policy: AnomalyPolicy = AnomalyPolicy()
) -> list[AnomalyFlag]:
    """Run the fraud heuristics over a log.

    Rate rule: an IP whose vote count inside any sliding 60-second window
    exceeds the per-minute limit gets one flag carrying its worst window.
    Duplicate rule: every (ip, proposal) pair with more votes than the
    per-proposal limit over the whole log gets one flag. Output is
    deterministic and depends only on the log contents.
    """
    votes_by_ip: dict[str, list[LedgerEvent]] = {}
    for event in events:
        if event.kind is EventKind.VOTE_CAST:
            votes_by_ip.setdefault(event.ip, []).append(event)

    flags: list[AnomalyFlag] = []
    for ip in sorted(votes_by_ip):
        votes = sorted(votes_by_ip[ip], key=lambda e: (e.timestamp, e.seq))
        flag = _worst_rate_window(ip, votes, policy.max_votes_per_ip_per_minute)
        if flag is not None:
            flags.append(flag)
        per_proposal: dict[str, list[LedgerEvent]] = {}
        for vote in votes:
            per_proposal.setdefault(vote.proposal_id, []).append(vote)
        for pid in sorted(per_proposal):
            group = per_proposal[pid]
            if len(group) > policy.max_votes_per_ip_per_proposal:
                flags.append(
                    AnomalyFlag(
                        ip=ip,
                        window_start=group[0].timestamp,
                        window_end=group[-1].timestamp,
                        observed_rate=float(len(group)),
                        rule=DUPLICATE_RULE,
                        affected_proposals=(pid,),
                    )
                )
    flags.sort(key=lambda f: (f.rule, f.ip, f.window_start))
    return flags


def _worst_rate_window(
    ip: str, votes: Sequence[LedgerEvent], limit: int
) -> AnomalyFlag | None:
    # Max votes in any [t, t + 60 s) window; windows starting at each vote
    # cover all maxima.
    best_count = 0
    best_start = 0
    j = 0
    for i in range(len(votes)):
        start = votes[i].timestamp
        if j < i:
            j = i
        while (
            j < len(votes)
            and (votes[j].timestamp - start).total_seconds() < _WINDOW_SECONDS
        ):
            j += 1
        if j - i > best_count:
            best_count = j - i
            best_start = i
    if best_count <= limit:
        return None
    window = votes[best_start : best_start + best_count]
    return AnomalyFlag(
        ip=ip,
        window_start=window[0].timestamp,
        window_end=window[-1].timestamp,
        observed_rate=float(best_count),
        rule=RATE_RULE,
        affected_proposals=tuple(sorted({v.proposal_id for v in window})),
    )


def redact_ip(ip: str) -> str:
    """Truncate an address for publishable log exports.

    IPv4 keeps its /24, IPv6 its /48; anything unparseable collapses to
    ``"redacted"``. Redaction happens on export only; the live log always
    stores the full address.
    """
    try:
        parsed = ipaddress.ip_address(ip)
    except ValueError:
        return "redacted"
    if isinstance(parsed, ipaddress.IPv4Address):
        net = ipaddress.ip_network(f"{parsed}/24", strict=False)
    else:
        net = ipaddress.ip_network(f"{parsed}/48", strict=False)
    return str(net)
