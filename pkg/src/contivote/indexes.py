"""Decision-model arithmetic for continuous approval voting.

Pure functions over immutable values: per-proposal approval and
participation indexes, threshold classification, and the ranking order.
No storage or network concerns live here; everything is safe to call
from any number of concurrent contexts.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

__all__ = [
    "ALTERNATE_ALPHA_BAR",
    "Classification",
    "DynamicThresholds",
    "Indexes",
    "InvariantViolation",
    "ProposalStanding",
    "ResolvedThresholds",
    "Tally",
    "ThresholdPolicy",
    "Verdict",
    "VoteKind",
    "classify",
    "compute_indexes",
    "dynamic_thresholds",
    "rank",
]

# Default decision thresholds; 1/3 is the accepted alternate preset for
# the approval bar.
DEFAULT_ALPHA_BAR = 0.5
DEFAULT_GAMMA_BAR = 0.5
ALTERNATE_ALPHA_BAR = 1.0 / 3.0


class InvariantViolation(ValueError):
    """A domain value broke one of its structural invariants."""


class VoteKind(str, Enum):
    """The three possible manifestations a voter can give one exhibition."""

    APPROVE = "approve"
    DISAPPROVE = "disapprove"
    INDIFFERENT = "indifferent"


class Verdict(str, Enum):
    """Outcome of the approval-bar comparison for one proposal."""

    APPROVED = "approved"
    DISAPPROVED = "disapproved"
    CLASH = "clash"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Tally:
    """Per-proposal counters from which everything else derives.

    ``eta`` counts exhibitions (one per presentation of the proposal to a
    voter session); ``v_plus`` and ``v_minus`` count approve and disapprove
    votes. The indifferent count is the remainder ``eta - v_plus - v_minus``
    and covers both explicit indifferent votes and exhibitions that were
    never answered.
    """

    proposal_id: str
    v_plus: int = 0
    v_minus: int = 0
    eta: int = 0

    def __post_init__(self) -> None:
        _check_tally(self.v_plus, self.v_minus, self.eta)

    @property
    def v_zero(self) -> int:
        """Indifferent manifestations, implicit ones included."""
        return self.eta - self.v_plus - self.v_minus

    def with_exhibition(self) -> "Tally":
        """Counters after one more presentation of this proposal."""
        return dataclasses.replace(self, eta=self.eta + 1)

    def with_vote(self, kind: VoteKind) -> "Tally":
        """Counters after one manifestation of ``kind``.

        An indifferent vote changes nothing: the exhibition it answers was
        already counted, and the indifferent count is a remainder.
        """
        if kind is VoteKind.APPROVE:
            return dataclasses.replace(self, v_plus=self.v_plus + 1)
        if kind is VoteKind.DISAPPROVE:
            return dataclasses.replace(self, v_minus=self.v_minus + 1)
        return self


def _check_tally(v_plus: int, v_minus: int, eta: int) -> None:
    for name, value in (("v_plus", v_plus), ("v_minus", v_minus), ("eta", eta)):
        if not isinstance(value, int) or value < 0:
            raise InvariantViolation(f"{name} must be a non-negative integer, got {value!r}")
    if v_plus + v_minus > eta:
        raise InvariantViolation(
            f"vote counts exceed exhibitions: {v_plus} + {v_minus} > {eta}"
        )


@dataclass(frozen=True)
class Indexes:
    """The (approval, participation) index pair for one proposal.

    Both are ``None`` while the proposal has never been exhibited: with no
    denominator there is no estimate, and reporting 0.0 would make an
    unseen proposal read as unanimous indifference.
    """

    alpha: float | None
    gamma: float | None

    def __post_init__(self) -> None:
        if (self.alpha is None) != (self.gamma is None):
            raise InvariantViolation("alpha and gamma must be defined together")
        if self.alpha is None:
            return
        if not -1.0 <= self.alpha <= 1.0 or not 0.0 <= self.gamma <= 1.0:
            raise InvariantViolation(f"indexes out of range: ({self.alpha}, {self.gamma})")
        if abs(self.alpha) > self.gamma:
            raise InvariantViolation(
                f"|alpha| cannot exceed gamma: ({self.alpha}, {self.gamma})"
            )

    @property
    def defined(self) -> bool:
        return self.alpha is not None


UNDEFINED_INDEXES = Indexes(None, None)


def compute_indexes(tally: Tally) -> Indexes:
    """Approval and participation indexes of one proposal.

    alpha = (v_plus - v_minus) / eta is the net approval per exhibition,
    in [-1, 1]. gamma = (v_plus + v_minus) / eta is the fraction of
    exhibitions that drew a non-indifferent manifestation, in [0, 1].
    Always |alpha| <= gamma. Undefined when eta = 0.
    """
    _check_tally(tally.v_plus, tally.v_minus, tally.eta)
    if tally.eta == 0:
        return UNDEFINED_INDEXES
    eta = float(tally.eta)
    return Indexes(
        alpha=(tally.v_plus - tally.v_minus) / eta,
        gamma=(tally.v_plus + tally.v_minus) / eta,
    )


@dataclass(frozen=True)
class ThresholdPolicy:
    """Operator-chosen decision thresholds.

    Exactly one of ``eta_bar`` (absolute exhibition count) and
    ``sampling_fraction`` (resolved per snapshot so that the given share of
    proposals clears the bar; see ``estimator.resolve_eta_bar``) is set.
    With ``dynamic=True`` the gamma/alpha bars are replaced per proposal by
    ``dynamic_thresholds``; the mode ships but defaults off.
    """

    gamma_bar: float = DEFAULT_GAMMA_BAR
    alpha_bar: float = DEFAULT_ALPHA_BAR
    eta_bar: int | None = None
    sampling_fraction: float | None = 0.15
    dynamic: bool = False

    def __post_init__(self) -> None:
        if (self.eta_bar is None) == (self.sampling_fraction is None):
            raise InvariantViolation(
                "exactly one of eta_bar and sampling_fraction must be set"
            )
        if self.eta_bar is not None and (not isinstance(self.eta_bar, int) or self.eta_bar < 0):
            raise InvariantViolation(f"eta_bar must be a non-negative integer, got {self.eta_bar!r}")
        if self.sampling_fraction is not None and not 0.10 <= self.sampling_fraction <= 0.20:
            raise InvariantViolation(
                f"sampling_fraction must lie in [0.10, 0.20], got {self.sampling_fraction!r}"
            )
        if not 0.0 <= self.gamma_bar <= 1.0:
            raise InvariantViolation(f"gamma_bar must lie in [0, 1], got {self.gamma_bar!r}")
        if not 0.0 <= self.alpha_bar <= 1.0:
            raise InvariantViolation(f"alpha_bar must lie in [0, 1], got {self.alpha_bar!r}")


@dataclass(frozen=True)
class ResolvedThresholds:
    """Thresholds pinned to concrete numbers for one classification.

    ``fallback`` records that dynamic per-proposal values could not be
    computed and the static ones were used instead.
    """

    eta_bar: int
    gamma_bar: float
    alpha_bar: float
    fallback: bool = False

    def __post_init__(self) -> None:
        if self.eta_bar < 0:
            raise InvariantViolation("eta_bar must be non-negative")


@dataclass(frozen=True)
class DynamicThresholds:
    """Per-proposal bars produced by ``dynamic_thresholds``."""

    gamma_bar: float
    alpha_bar: float
    fallback: bool = False


@dataclass(frozen=True)
class Classification:
    """Outcome flags for one proposal under one resolved threshold set."""

    sampled: bool
    relevant: bool
    verdict: Verdict
    prioritized: bool


def classify(indexes: Indexes, tally: Tally, thresholds: ResolvedThresholds) -> Classification:
    """Run the threshold cascade for one proposal.

    sampled iff eta > eta_bar and relevant iff gamma > gamma_bar, both
    strict; the verdict is clash when |alpha| <= alpha_bar (boundary
    included), approved when alpha > alpha_bar, disapproved when
    -alpha > alpha_bar. A proposal is prioritized iff it is both sampled
    and relevant. Undefined indexes give an undetermined verdict and can
    never be relevant or prioritized; sampled still follows from eta.
    """
    sampled = tally.eta > thresholds.eta_bar
    if not indexes.defined:
        return Classification(
            sampled=sampled, relevant=False, verdict=Verdict.UNDETERMINED, prioritized=False
        )
    alpha = indexes.alpha
    gamma = indexes.gamma
    relevant = gamma > thresholds.gamma_bar
    if alpha > thresholds.alpha_bar:
        verdict = Verdict.APPROVED
    elif -alpha > thresholds.alpha_bar:
        verdict = Verdict.DISAPPROVED
    else:
        verdict = Verdict.CLASH
    return Classification(
        sampled=sampled,
        relevant=relevant,
        verdict=verdict,
        prioritized=sampled and relevant,
    )


def dynamic_thresholds(
    tally: Tally,
    max_eta: int,
    static: ThresholdPolicy | None = None,
) -> DynamicThresholds:
    """Per-proposal bars tied to the proposal's own exposure and engagement.

    gamma_bar_i = 1 - eta_i / max_eta, so the most-exhibited proposal needs
    no engagement bar at all, and alpha_bar_i = 1 - gamma_i, so full
    engagement removes the approval bar. When max_eta = 0 or the proposal's
    own indexes are undefined, the static policy values are returned with
    ``fallback=True``.
    """
    if static is None:
        static = ThresholdPolicy()
    indexes = compute_indexes(tally)
    if max_eta < 1 or not indexes.defined:
        return DynamicThresholds(
            gamma_bar=static.gamma_bar, alpha_bar=static.alpha_bar, fallback=True
        )
    if tally.eta > max_eta:
        raise InvariantViolation(
            f"tally eta {tally.eta} exceeds the pool maximum {max_eta}"
        )
    return DynamicThresholds(
        gamma_bar=1.0 - tally.eta / max_eta,
        alpha_bar=1.0 - indexes.gamma,
    )


@dataclass(frozen=True)
class ProposalStanding:
    """One proposal's tally, indexes and classification, ready to rank."""

    proposal_id: str
    tally: Tally
    indexes: Indexes
    classification: Classification


def rank(standings: Iterable[ProposalStanding]) -> list[ProposalStanding]:
    """Total, deterministic ranking order over classified proposals.

    Prioritized proposals come first. Within each group the order is
    descending alpha (undefined last), ties broken by descending gamma,
    then descending eta, then ascending proposal id. The sort key is the
    one operator-configurable piece of the ranking and lives only here.
    """

    def key(s: ProposalStanding):
        defined = s.indexes.defined
        return (
            0 if s.classification.prioritized else 1,
            0 if defined else 1,
            -(s.indexes.alpha if defined else 0.0),
            -(s.indexes.gamma if defined else 0.0),
            -s.tally.eta,
            s.proposal_id,
        )

    return sorted(standings, key=key)
