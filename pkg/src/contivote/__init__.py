"""Continuous voting by approval and participation.

Voters see proposals one at a time, answer approve / disapprove /
indifferent without authenticating, and can insert new proposals while
voting runs. Each proposal carries an approval index (net approval per
exhibition) and a participation index (share of exhibitions answered),
classified against operator thresholds into a live priority ranking.
Every event lands in an append-only ledger so tallies can be replayed,
audited, and recomputed with suspect IPs excluded.
"""

from .estimator import (
    EtaBarResolution,
    IntervalEstimate,
    PopulationSpec,
    UndefinedEstimateError,
    confidence_interval,
    resolve_eta_bar,
    rmse_curve,
    rmse_curve_csv,
    simulate_tally,
    stderr_indexes,
)
from .indexes import (
    ALTERNATE_ALPHA_BAR,
    Classification,
    DynamicThresholds,
    Indexes,
    InvariantViolation,
    ProposalStanding,
    ResolvedThresholds,
    Tally,
    ThresholdPolicy,
    Verdict,
    VoteKind,
    classify,
    compute_indexes,
    dynamic_thresholds,
    rank,
)
from .ledger import (
    AnomalyFlag,
    AnomalyPolicy,
    CorruptRecordError,
    EventKind,
    Ledger,
    LedgerEvent,
    PrecedenceError,
    flag_anomalies,
    now_utc_ms,
    read_events,
    redact_ip,
    replay,
    write_events,
)
from .ranking import RankingRow, evaluate, rows_to_csv
from .scheduler import NoProposalsError, SessionState, next_proposal, record_exhibition

__version__ = "0.1.0"

__all__ = [
    "ALTERNATE_ALPHA_BAR",
    "AnomalyFlag",
    "AnomalyPolicy",
    "Classification",
    "CorruptRecordError",
    "DynamicThresholds",
    "EtaBarResolution",
    "EventKind",
    "Indexes",
    "IntervalEstimate",
    "InvariantViolation",
    "Ledger",
    "LedgerEvent",
    "NoProposalsError",
    "PopulationSpec",
    "PrecedenceError",
    "ProposalStanding",
    "RankingRow",
    "ResolvedThresholds",
    "SessionState",
    "Tally",
    "ThresholdPolicy",
    "UndefinedEstimateError",
    "Verdict",
    "VoteKind",
    "classify",
    "compute_indexes",
    "confidence_interval",
    "dynamic_thresholds",
    "evaluate",
    "flag_anomalies",
    "next_proposal",
    "now_utc_ms",
    "rank",
    "read_events",
    "record_exhibition",
    "redact_ip",
    "replay",
    "resolve_eta_bar",
    "rmse_curve",
    "rmse_curve_csv",
    "rows_to_csv",
    "simulate_tally",
    "stderr_indexes",
    "write_events",
]
