"""Exhibition scheduling: which proposal a voter session sees next.

Proposals are dealt to each session as uniform random draws without
replacement within a cycle; once the session has seen every current
proposal the cycle resets. The pool is re-read on every call, so a
proposal inserted mid-cycle enters the draw immediately. Each session's
state is owned by its own request stream; nothing here is shared.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .indexes import Tally

__all__ = ["NoProposalsError", "SessionState", "next_proposal", "record_exhibition"]


class NoProposalsError(LookupError):
    """There is nothing to exhibit: the proposal pool is empty."""


@dataclass
class SessionState:
    """One voter session's progress through the current cycle."""

    session_id: str
    seen: set[str] = field(default_factory=set)
    cycle: int = 0


def next_proposal(
    session: SessionState,
    pool: Sequence[str],
    rng: random.Random,
    *,
    eta_by_id: Mapping[str, int] | None = None,
    balance_exposure: bool = False,
) -> str:
    """Draw the next proposal to show this session and mark it seen.

    Uniform over the pool minus what the session already saw this cycle;
    when that set is empty the cycle resets and the full pool is drawn
    from again.

    ``balance_exposure=True`` weights the draw by 1 / (1 + eta) so
    under-exhibited proposals reach the trust threshold sooner. That mode
    is an operational extra and defaults off: the plain uniform draw is
    what the index estimates assume.
    """
    if not pool:
        raise NoProposalsError("no proposals to exhibit")
    session.seen &= set(pool)  # drop proposals removed from the pool
    candidates = [p for p in pool if p not in session.seen]
    if not candidates:
        session.seen.clear()
        session.cycle += 1
        candidates = list(pool)
    if balance_exposure and eta_by_id is not None:
        weights = [1.0 / (1.0 + eta_by_id.get(p, 0)) for p in candidates]
        choice = rng.choices(candidates, weights=weights, k=1)[0]
    else:
        choice = candidates[rng.randrange(len(candidates))]
    session.seen.add(choice)
    return choice


def record_exhibition(tally: Tally) -> Tally:
    """Account one presentation: the exhibition count grows by exactly 1.

    Incrementing at exhibition time (not vote time) is what lets an
    unanswered exhibition accrue as implicit indifference.
    """
    return tally.with_exhibition()
