"""Operator and researcher entry point.

``serve`` runs the HTTP service, ``simulate`` drives the scheduler with
synthetic voters to measure estimate error end to end, ``rank`` recomputes
a ranking offline from a ledger file, and ``export`` produces a shareable
copy of a ledger with IPs redacted.

Exit codes: 0 success, 1 usage or config error, 2 data error (corrupt
ledger, bad simulation spec). All commands are deterministic for fixed
seeds and inputs.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import random
import sys
from pathlib import Path

import click

from .config import ConfigError, load_config
from .estimator import PopulationSpec
from .indexes import InvariantViolation, Tally, ThresholdPolicy, VoteKind, compute_indexes
from .ledger import CorruptRecordError, read_events, redact_ip, replay, write_events
from .ranking import RankingRow, evaluate, rows_to_csv
from .scheduler import SessionState, next_proposal, record_exhibition

__all__ = ["main"]


class DataError(Exception):
    """Input data is unusable (exit code 2)."""


@click.group()
def cli():
    """Continuous approval/participation voting tools."""


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="JSON config file.")
def serve(config_path: str):
    """Run the voting service until interrupted."""
    import uvicorn

    from .service import VotingService, create_app

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    service = VotingService(config)
    app = create_app(service)
    click.echo(f"listening on http://{config.host}:{config.port} (ledger: {config.ledger_path})")
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    finally:
        service.close()


def _read_spec_rows(path: str) -> list[PopulationSpec]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read spec file {path}: {exc}") from exc
    specs = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if lineno == 1 and stripped.replace(" ", "") == "p_plus,p_minus":
            continue
        parts = [p.strip() for p in stripped.split(",")]
        try:
            if len(parts) != 2:
                raise ValueError("expected two comma-separated probabilities")
            spec = PopulationSpec(p_plus=float(parts[0]), p_minus=float(parts[1]))
        except (ValueError, InvariantViolation) as exc:
            raise DataError(f"spec file row {lineno}: {exc}") from exc
        specs.append(spec)
    if not specs:
        raise DataError(f"spec file {path} contains no population rows")
    return specs


@cli.command()
@click.option("--proposals", "n_proposals", required=True, type=int, help="Pool size.")
@click.option("--spec-file", required=True, type=click.Path(), help="CSV of p_plus,p_minus rows (one shared row or one per proposal).")
@click.option("--votes", "n_votes", required=True, type=int, help="Total synthetic voter interactions.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Per-proposal results CSV.")
def simulate(n_proposals: int, spec_file: str, n_votes: int, seed: int, out_path: str):
    """Drive the scheduler with synthetic voters and measure index error.

    Writes one row per proposal to --out and prints an error-versus-eta
    summary (CSV) to stdout.
    """
    if n_proposals < 1:
        raise click.UsageError("--proposals must be at least 1")
    if n_votes < 0:
        raise click.UsageError("--votes must be non-negative")
    specs = _read_spec_rows(spec_file)
    if len(specs) == 1:
        specs = specs * n_proposals
    elif len(specs) != n_proposals:
        raise DataError(
            f"spec file has {len(specs)} rows but --proposals is {n_proposals}; "
            "provide one row or exactly one per proposal"
        )

    width = len(str(n_proposals))
    pool = [f"p{i:0{width}d}" for i in range(1, n_proposals + 1)]
    spec_by_id = dict(zip(pool, specs))
    tallies = {pid: Tally(proposal_id=pid) for pid in pool}
    rng = random.Random(seed)
    session = SessionState("sim")

    for _ in range(n_votes):
        pid = next_proposal(session, pool, rng)
        tallies[pid] = record_exhibition(tallies[pid])
        u = rng.random()
        spec = spec_by_id[pid]
        if u < spec.p_plus:
            tallies[pid] = tallies[pid].with_vote(VoteKind.APPROVE)
        elif u < spec.p_plus + spec.p_minus:
            tallies[pid] = tallies[pid].with_vote(VoteKind.DISAPPROVE)

    lines = ["proposal_id,true_alpha,alpha_hat,error,eta"]
    for pid in pool:
        tally = tallies[pid]
        spec = spec_by_id[pid]
        idx = compute_indexes(tally)
        if idx.defined:
            err = idx.alpha - spec.true_alpha
            lines.append(f"{pid},{spec.true_alpha!r},{idx.alpha!r},{err!r},{tally.eta}")
        else:
            lines.append(f"{pid},{spec.true_alpha!r},,,{tally.eta}")
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    # Same-eta proposals are independent trials, so grouping by eta gives
    # an empirical error curve.
    by_eta: dict[int, list[tuple[float, float]]] = {}
    for pid in pool:
        tally = tallies[pid]
        idx = compute_indexes(tally)
        if not idx.defined:
            continue
        spec = spec_by_id[pid]
        by_eta.setdefault(tally.eta, []).append(
            (idx.alpha - spec.true_alpha, idx.gamma - spec.true_gamma)
        )
    click.echo("eta,rmse_alpha,rmse_gamma")
    for eta in sorted(by_eta):
        errs = by_eta[eta]
        rmse_a = math.sqrt(sum(e[0] ** 2 for e in errs) / len(errs))
        rmse_g = math.sqrt(sum(e[1] ** 2 for e in errs) / len(errs))
        click.echo(f"{eta},{rmse_a!r},{rmse_g!r}")


def _read_ip_file(path: str) -> frozenset[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read IP list {path}: {exc}") from exc
    return frozenset(
        line.strip() for line in lines if line.strip() and not line.strip().startswith("#")
    )


def _format_table(rows: list[RankingRow]) -> str:
    def fmt(value, width):
        if value is None:
            return " " * (width - 1) + "-"
        if isinstance(value, float):
            return f"{value:>{width}.4f}"
        return f"{value:>{width}}"

    out = [f"{'#':>3} {'proposal':<14} {'alpha':>8} {'gamma':>8} {'eta':>7} "
           f"{'stderr':>8} {'verdict':<12} {'flags':<20}"]
    for i, row in enumerate(rows, start=1):
        flags = ",".join(
            name for name, on in
            [("sampled", row.sampled), ("relevant", row.relevant), ("prioritized", row.prioritized)]
            if on
        ) or "-"
        out.append(
            f"{i:>3} {row.proposal_id:<14} {fmt(row.alpha, 8)} {fmt(row.gamma, 8)} "
            f"{row.eta:>7} {fmt(row.stderr_alpha, 8)} {row.verdict:<12} {flags:<20}"
        )
    return "\n".join(out)


@cli.command(name="rank")
@click.option("--ledger", "ledger_path", required=True, type=click.Path(), help="Ledger file to replay.")
@click.option("--exclude-ips", "exclude_path", type=click.Path(), help="File of IPs whose votes are dropped (exhibitions kept).")
@click.option("--alpha-bar", default=0.5, type=float, show_default=True)
@click.option("--gamma-bar", default=0.5, type=float, show_default=True)
@click.option("--fraction", type=float, help="Resolve eta_bar so this share of proposals is sampled.")
@click.option("--eta-bar", "eta_bar", type=int, help="Absolute exhibition threshold.")
@click.option("--dynamic", is_flag=True, help="Per-proposal gamma/alpha bars.")
@click.option("--format", "fmt", type=click.Choice(["table", "csv"]), default="table", show_default=True)
def rank_command(ledger_path, exclude_path, alpha_bar, gamma_bar, fraction, eta_bar, dynamic, fmt):
    """Replay a ledger and print the ranking it implies."""
    if fraction is not None and eta_bar is not None:
        raise click.UsageError("--fraction and --eta-bar are mutually exclusive")
    if fraction is None and eta_bar is None:
        fraction = 0.15
    try:
        policy = ThresholdPolicy(
            gamma_bar=gamma_bar,
            alpha_bar=alpha_bar,
            eta_bar=eta_bar,
            sampling_fraction=fraction,
            dynamic=dynamic,
        )
    except InvariantViolation as exc:
        raise click.UsageError(str(exc)) from exc
    try:
        events = read_events(ledger_path)
    except OSError as exc:
        raise DataError(f"cannot read ledger {ledger_path}: {exc}") from exc
    except CorruptRecordError as exc:
        raise DataError(str(exc)) from exc
    exclude = _read_ip_file(exclude_path) if exclude_path else frozenset()
    rows = evaluate(replay(events, exclude_ips=exclude), policy)
    if fmt == "csv":
        click.echo(rows_to_csv(rows), nl=False)
    else:
        click.echo(_format_table(rows))


@cli.command()
@click.option("--ledger", "ledger_path", required=True, type=click.Path(), help="Ledger file to export.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--keep-ips", is_flag=True, help="Skip IP redaction (default is to redact).")
def export(ledger_path: str, out_path: str, keep_ips: bool):
    """Copy a ledger for publication, truncating IPs unless told otherwise."""
    try:
        events = read_events(ledger_path)
    except OSError as exc:
        raise DataError(f"cannot read ledger {ledger_path}: {exc}") from exc
    except CorruptRecordError as exc:
        raise DataError(str(exc)) from exc
    if not keep_ips:
        events = [dataclasses.replace(e, ip=redact_ip(e.ip)) for e in events]
    write_events(out_path, events)
    click.echo(f"wrote {len(events)} events to {out_path}" + ("" if keep_ips else " (IPs redacted)"))


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
