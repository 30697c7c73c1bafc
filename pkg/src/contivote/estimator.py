"""Sampling-error machinery for the approval and participation indexes.

Both indexes are ratio estimates whose error shrinks as the exhibition
count grows. This module quantifies that error (plug-in multinomial
standard errors, normal-approximation intervals), resolves the
percentile-based exhibition threshold, and provides a seeded Monte Carlo
oracle used by the convergence checks.
"""

from __future__ import annotations

import bisect
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .indexes import InvariantViolation, Tally, compute_indexes

__all__ = [
    "EtaBarResolution",
    "IntervalEstimate",
    "PopulationSpec",
    "UndefinedEstimateError",
    "confidence_interval",
    "resolve_eta_bar",
    "rmse_curve",
    "rmse_curve_csv",
    "simulate_tally",
    "stderr_indexes",
]


class UndefinedEstimateError(ValueError):
    """Raised when an estimate is requested for a never-exhibited proposal."""


@dataclass(frozen=True)
class PopulationSpec:
    """Per-proposal voter population: i.i.d. manifestation probabilities.

    Each exhibition independently draws approve with probability ``p_plus``,
    disapprove with ``p_minus``, and is indifferent otherwise. Under this
    model the indexes estimate the constants alpha = p_plus - p_minus and
    gamma = p_plus + p_minus.
    """

    p_plus: float
    p_minus: float

    def __post_init__(self) -> None:
        if self.p_plus < 0 or self.p_minus < 0:
            raise InvariantViolation("probabilities must be non-negative")
        if self.p_plus + self.p_minus > 1.0 + 1e-12:
            raise InvariantViolation(
                f"p_plus + p_minus must not exceed 1, got {self.p_plus + self.p_minus}"
            )

    @property
    def p_zero(self) -> float:
        return max(0.0, 1.0 - self.p_plus - self.p_minus)

    @property
    def true_alpha(self) -> float:
        return self.p_plus - self.p_minus

    @property
    def true_gamma(self) -> float:
        return self.p_plus + self.p_minus


@dataclass(frozen=True)
class IntervalEstimate:
    """A point estimate with its standard error and a two-sided interval."""

    point: float
    stderr: float
    lower: float
    upper: float
    level: float

    def __post_init__(self) -> None:
        if self.stderr < 0:
            raise InvariantViolation("stderr must be non-negative")
        if not self.lower <= self.point <= self.upper:
            raise InvariantViolation("interval must contain its point estimate")


def stderr_indexes(tally: Tally) -> tuple[float, float]:
    """Plug-in standard errors of the two indexes.

    The per-exhibition manifestation is a three-way categorical draw, so
    Var(alpha_hat) = (gamma - alpha^2) / eta and
    Var(gamma_hat) = gamma (1 - gamma) / eta; the unknown population values
    are replaced by their sample estimates. Clamped at zero against float
    dust at the boundaries.
    """
    if tally.eta < 1:
        raise UndefinedEstimateError(
            f"proposal {tally.proposal_id!r} was never exhibited"
        )
    idx = compute_indexes(tally)
    eta = float(tally.eta)
    var_alpha = max(0.0, idx.gamma - idx.alpha**2) / eta
    var_gamma = max(0.0, idx.gamma * (1.0 - idx.gamma)) / eta
    return float(np.sqrt(var_alpha)), float(np.sqrt(var_gamma))


def confidence_interval(tally: Tally, level: float = 0.95) -> tuple[IntervalEstimate, IntervalEstimate]:
    """Normal-approximation intervals for both indexes.

    Returns the (alpha, gamma) pair of interval estimates, each
    point +- z(level) * stderr, clipped to the index's natural range
    ([-1, 1] and [0, 1] respectively).
    """
    if tally.eta < 1:
        raise UndefinedEstimateError(
            f"proposal {tally.proposal_id!r} was never exhibited"
        )
    if not 0.0 < level < 1.0:
        raise InvariantViolation(f"confidence level must lie in (0, 1), got {level!r}")
    idx = compute_indexes(tally)
    se_alpha, se_gamma = stderr_indexes(tally)
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    alpha_ci = IntervalEstimate(
        point=idx.alpha,
        stderr=se_alpha,
        lower=max(-1.0, idx.alpha - z * se_alpha),
        upper=min(1.0, idx.alpha + z * se_alpha),
        level=level,
    )
    gamma_ci = IntervalEstimate(
        point=idx.gamma,
        stderr=se_gamma,
        lower=max(0.0, idx.gamma - z * se_gamma),
        upper=min(1.0, idx.gamma + z * se_gamma),
        level=level,
    )
    return alpha_ci, gamma_ci


@dataclass(frozen=True)
class EtaBarResolution:
    """A resolved exhibition threshold and the share it actually selects."""

    eta_bar: int
    achieved_fraction: float


def resolve_eta_bar(etas: Iterable[int], fraction: float) -> EtaBarResolution:
    """Smallest exhibition threshold selecting at most ``fraction`` of proposals.

    Returns the smallest non-negative integer t such that the share of
    proposals with eta strictly greater than t is <= fraction (strict,
    matching the sampled test). With ties the exact fraction may be
    unattainable, so the achieved share is reported alongside.
    """
    values = sorted(int(e) for e in etas)
    n = len(values)
    if n == 0:
        raise InvariantViolation("cannot resolve eta_bar over an empty proposal set")
    if not 0.10 <= fraction <= 0.20:
        raise InvariantViolation(
            f"sampling fraction must lie in [0.10, 0.20], got {fraction!r}"
        )
    if min(values) < 0:
        raise InvariantViolation("exhibition counts must be non-negative")

    def share_above(t: int) -> float:
        # values is sorted ascending; count strictly greater than t
        return (n - bisect.bisect_right(values, t)) / n

    # The share only changes at observed eta values, so the smallest valid
    # integer is either 0 or one of them.
    for candidate in [0] + values:
        achieved = share_above(candidate)
        if achieved <= fraction:
            return EtaBarResolution(eta_bar=candidate, achieved_fraction=achieved)
    raise AssertionError("unreachable: share above max(values) is 0")


def simulate_tally(
    spec: PopulationSpec, eta: int, seed: int, proposal_id: str = "sim"
) -> Tally:
    """Draw one synthetic tally of ``eta`` independent manifestations.

    Deterministic for a given seed. The oracle behind every convergence
    check in this module.
    """
    if eta < 0:
        raise InvariantViolation(f"eta must be non-negative, got {eta!r}")
    rng = np.random.default_rng(seed)
    v_plus, v_minus, _ = rng.multinomial(eta, [spec.p_plus, spec.p_minus, spec.p_zero])
    return Tally(proposal_id=proposal_id, v_plus=int(v_plus), v_minus=int(v_minus), eta=eta)


def rmse_curve(
    spec: PopulationSpec,
    eta_list: Sequence[int],
    trials: int,
    seed: int,
) -> list[tuple[int, float, float]]:
    """Monte Carlo root-mean-square error of both indexes versus eta.

    For each requested eta, draws ``trials`` independent tallies and
    measures the RMSE of alpha_hat against the population alpha (and of
    gamma_hat against gamma). The curve decays like 1/sqrt(eta), which is
    the whole reason a minimum exhibition count is demanded before an
    estimate is trusted.
    """
    if trials < 1:
        raise InvariantViolation(f"trials must be at least 1, got {trials!r}")
    if any(e < 1 for e in eta_list):
        raise InvariantViolation("every eta must be at least 1")
    rng = np.random.default_rng(seed)
    pvals = [spec.p_plus, spec.p_minus, spec.p_zero]
    rows: list[tuple[int, float, float]] = []
    for eta in eta_list:
        draws = rng.multinomial(eta, pvals, size=trials).astype(np.float64)
        alpha_hat = (draws[:, 0] - draws[:, 1]) / eta
        gamma_hat = (draws[:, 0] + draws[:, 1]) / eta
        rmse_alpha = float(np.sqrt(np.mean((alpha_hat - spec.true_alpha) ** 2)))
        rmse_gamma = float(np.sqrt(np.mean((gamma_hat - spec.true_gamma) ** 2)))
        rows.append((int(eta), rmse_alpha, rmse_gamma))
    return rows


def rmse_curve_csv(rows: Iterable[tuple[int, float, float]]) -> str:
    """Render rmse_curve output as CSV for plotting elsewhere."""
    buf = io.StringIO()
    buf.write("eta,rmse_alpha,rmse_gamma\n")
    for eta, rmse_alpha, rmse_gamma in rows:
        buf.write(f"{eta},{rmse_alpha!r},{rmse_gamma!r}\n")
    return buf.getvalue()
