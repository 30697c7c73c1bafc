"""Snapshot evaluation: tallies in, ranked and classified rows out.

The live ranking endpoint and the offline replay command both call
``evaluate`` so they can never disagree on the same events and policy.
The CSV encoding here is the canonical serialization used to compare the
two surfaces byte for byte.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping

from .estimator import resolve_eta_bar, stderr_indexes
from .indexes import (
    ProposalStanding,
    ResolvedThresholds,
    Tally,
    ThresholdPolicy,
    classify,
    compute_indexes,
    dynamic_thresholds,
    rank,
)

__all__ = ["RankingRow", "evaluate", "resolve_policy_eta_bar", "rows_to_csv"]

CSV_HEADER = (
    "proposal_id",
    "alpha",
    "gamma",
    "eta",
    "stderr_alpha",
    "sampled",
    "relevant",
    "verdict",
    "prioritized",
)


@dataclass(frozen=True)
class RankingRow:
    proposal_id: str
    alpha: float | None
    gamma: float | None
    eta: int
    stderr_alpha: float | None
    sampled: bool
    relevant: bool
    verdict: str
    prioritized: bool

    def to_dict(self) -> dict:
        return {
            "proposal_id": self.proposal_id,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "eta": self.eta,
            "stderr_alpha": self.stderr_alpha,
            "sampled": self.sampled,
            "relevant": self.relevant,
            "verdict": self.verdict,
            "prioritized": self.prioritized,
        }


def resolve_policy_eta_bar(tallies: Mapping[str, Tally], policy: ThresholdPolicy) -> int:
    """The snapshot's concrete exhibition threshold.

    A fraction-based policy is resolved against this snapshot's etas; the
    pool changes continuously, so each snapshot resolves afresh.
    """
    if policy.eta_bar is not None:
        return policy.eta_bar
    resolution = resolve_eta_bar(
        (t.eta for t in tallies.values()), policy.sampling_fraction
    )
    return resolution.eta_bar


def evaluate(tallies: Mapping[str, Tally], policy: ThresholdPolicy) -> list[RankingRow]:
    """Classify and rank one consistent snapshot of tallies."""
    if not tallies:
        return []
    eta_bar = resolve_policy_eta_bar(tallies, policy)
    max_eta = max(t.eta for t in tallies.values())
    standings = []
    for pid in tallies:
        tally = tallies[pid]
        indexes = compute_indexes(tally)
        if policy.dynamic:
            bars = dynamic_thresholds(tally, max_eta, static=policy)
            resolved = ResolvedThresholds(
                eta_bar=eta_bar,
                gamma_bar=bars.gamma_bar,
                alpha_bar=bars.alpha_bar,
                fallback=bars.fallback,
            )
        else:
            resolved = ResolvedThresholds(
                eta_bar=eta_bar, gamma_bar=policy.gamma_bar, alpha_bar=policy.alpha_bar
            )
        standings.append(
            ProposalStanding(
                proposal_id=pid,
                tally=tally,
                indexes=indexes,
                classification=classify(indexes, tally, resolved),
            )
        )
    rows = []
    for s in rank(standings):
        se_alpha = stderr_indexes(s.tally)[0] if s.indexes.defined else None
        rows.append(
            RankingRow(
                proposal_id=s.proposal_id,
                alpha=s.indexes.alpha,
                gamma=s.indexes.gamma,
                eta=s.tally.eta,
                stderr_alpha=se_alpha,
                sampled=s.classification.sampled,
                relevant=s.classification.relevant,
                verdict=s.classification.verdict.value,
                prioritized=s.classification.prioritized,
            )
        )
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: list[RankingRow]) -> str:
    """Canonical CSV: header row, LF line endings, shortest-float cells."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_cell(getattr(row, name)) for name in CSV_HEADER])
    return buf.getvalue()
