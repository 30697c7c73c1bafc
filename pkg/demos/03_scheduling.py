"""How proposals are dealt to voter sessions.

One session never sees the same proposal twice in a cycle; across many
sessions the draw is uniform, which is exactly what the index estimates
assume. A proposal inserted mid-cycle joins the draw immediately.
"""

import random
from collections import Counter

from contivote import SessionState, Tally, next_proposal, record_exhibition

pool = [f"p{i}" for i in range(5)]
rng = random.Random(1)

# -- one session walks complete cycles ---------------------------------------

session = SessionState("demo-voter")
print("two cycles for one session (no repeats inside a cycle):")
for cycle in range(2):
    drawn = [next_proposal(session, pool, rng) for _ in range(len(pool))]
    print(f"  cycle {cycle}: {' '.join(drawn)}")

# -- a new proposal enters the draw on the very next call ---------------------

session = SessionState("latecomer-watcher")
next_proposal(session, ["a"], rng)
print("after seeing the whole pool {a}, a new proposal b arrives:",
      next_proposal(session, ["a", "b"], rng), "is drawn next")

# -- across fresh sessions the draw is uniform --------------------------------

counts = Counter(
    next_proposal(SessionState(f"s{i}"), pool, rng) for i in range(50_000)
)
print("\n50k fresh-session draws over 5 proposals:")
for pid in pool:
    print(f"  {pid}: {counts[pid]}")

# -- exhibitions are what the eta counter actually counts ---------------------

tally = Tally("p0")
for _ in range(3):
    tally = record_exhibition(tally)
print(f"\nafter 3 exhibitions and no votes: eta={tally.eta}, "
      f"implicit indifferents={tally.v_zero}")
