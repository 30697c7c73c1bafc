"""The append-only ledger: replayable tallies and fraud review.

Tallies are never stored; they are derived from the log. That makes two
things cheap: recovering state after a restart, and recomputing a ranking
with a suspect IP's votes excluded (exhibitions stay, so history is
annotated, never rewritten).
"""

import dataclasses
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

from contivote import (
    AnomalyPolicy,
    Ledger,
    LedgerEvent,
    VoteKind,
    flag_anomalies,
    read_events,
    redact_ip,
    replay,
    write_events,
)

T0 = datetime(2026, 1, 1, tzinfo=timezone.utc)
ts = lambda s: T0 + timedelta(seconds=s)

workdir = Path(tempfile.mkdtemp())
path = workdir / "ledger.jsonl"

# -- normal traffic, plus one bot hammering a single proposal ----------------

with Ledger(path) as ledger:
    ledger.append(LedgerEvent.proposal_added("A", "more benches", "s1", "10.0.0.1", ts(0)))
    ledger.append(LedgerEvent.proposal_added("B", "night buses", "s1", "10.0.0.1", ts(1)))
    for i, (session, ip, pid, kind) in enumerate([
        ("s1", "10.0.0.1", "A", VoteKind.APPROVE),
        ("s2", "10.0.0.2", "A", VoteKind.DISAPPROVE),
        ("s2", "10.0.0.2", "B", VoteKind.APPROVE),
        ("s3", "10.0.0.3", "B", VoteKind.INDIFFERENT),
    ]):
        ledger.append(LedgerEvent.exhibited(pid, session, ip, ts(10 + i)))
        ledger.append(LedgerEvent.vote_cast(pid, kind, session, ip, ts(10 + i)))
    for i in range(60):  # the bot: 60 approvals in 30 seconds
        ledger.append(LedgerEvent.exhibited("B", "bot", "198.51.100.9", ts(100 + i / 2)))
        ledger.append(LedgerEvent.vote_cast("B", VoteKind.APPROVE, "bot", "198.51.100.9", ts(100 + i / 2)))

events = read_events(path)
print(f"ledger holds {len(events)} events; first line is seq 1, gap-free")

print("\nreplayed tallies:")
for pid, tally in sorted(replay(events).items()):
    print(f"  {pid}: v+={tally.v_plus} v-={tally.v_minus} eta={tally.eta}")

# -- the heuristics point at the bot ------------------------------------------

for flag in flag_anomalies(events, AnomalyPolicy(30, 3)):
    print(f"\nflag[{flag.rule}]: ip={flag.ip} observed={flag.observed_rate:.0f} "
          f"proposals={','.join(flag.affected_proposals)}")

# -- recompute with the bot excluded: votes drop, exhibitions stay -------------

clean = replay(events, exclude_ips={"198.51.100.9"})
print(f"\nB with bot excluded: v+={clean['B'].v_plus} eta={clean['B'].eta} "
      "(approval collapses, exposure history intact)")

# -- publishable export: truncated addresses ----------------------------------

public = [dataclasses.replace(e, ip=redact_ip(e.ip)) for e in events]
write_events(workdir / "public.jsonl", public)
print(f"\nexported with {public[0].ip!r}-style IPs to {workdir / 'public.jsonl'}")
