"""HTTP facade tying the scheduler, ledger and decision model together.

Voters stay unauthenticated throughout: a session is an opaque random
token (cookie or ``X-Session-Token`` header) that scopes exhibition
cycles and vote matching but confers no identity. Managers authenticate
with a single shared secret on the ``/admin`` surface.

Every state change appends to the ledger and updates the live tally under
one lock, so the counters stay linearizable and always equal a replay of
the log. Ranking reads take a consistent snapshot.
"""

from __future__ import annotations

import logging
import random
import secrets
import threading
from dataclasses import dataclass
from typing import Callable

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import ServiceConfig
from .estimator import confidence_interval
from .indexes import InvariantViolation, Tally, ThresholdPolicy, VoteKind
from .ledger import (
    AnomalyFlag,
    Ledger,
    LedgerEvent,
    PrecedenceError,
    flag_anomalies,
    now_utc_ms,
    replay,
)
from .ranking import RankingRow, evaluate
from .scheduler import NoProposalsError, SessionState, next_proposal

__all__ = ["VoteRejected", "VotingService", "create_app"]

log = logging.getLogger("contivote.service")

SESSION_COOKIE = "cv_session"
SESSION_HEADER = "X-Session-Token"
ADMIN_HEADER = "X-Admin-Token"
MAX_PROPOSAL_CHARS = 2000
NO_SESSION = "-"


class VoteRejected(Exception):
    """The vote has no outstanding exhibition to answer (or already did)."""


@dataclass
class _Proposal:
    proposal_id: str
    text: str
    tombstoned: bool = False


class VotingService:
    """All voting-process state and transitions, HTTP-agnostic.

    Proposals, tallies and sessions live in memory and are rebuilt from
    the ledger on startup; tombstones are runtime moderation state and do
    not survive a restart (the log schema has no room for them, and they
    must never erase history anyway).
    """

    def __init__(
        self,
        config: ServiceConfig,
        *,
        ledger: Ledger | None = None,
        rng: random.Random | None = None,
        clock: Callable[[], object] = now_utc_ms,
    ):
        self._config = config
        self._ledger = ledger if ledger is not None else Ledger(config.ledger_path)
        self._rng = rng if rng is not None else random.Random()
        self._clock = clock
        self._lock = threading.RLock()
        self._policy = config.thresholds
        self._proposals: dict[str, _Proposal] = {}
        self._tallies: dict[str, Tally] = {}
        self._sessions: dict[str, SessionState] = {}
        self._restore()

    def _restore(self) -> None:
        events = self._ledger.events()
        self._tallies = replay(events)
        for event in events:
            if event.text is not None:
                self._proposals[event.proposal_id] = _Proposal(event.proposal_id, event.text)

    # -- voter surface ------------------------------------------------

    def add_proposal(self, text: str, session_id: str, ip: str) -> str:
        if not isinstance(text, str) or not text.strip():
            raise ValueError("proposal text must be non-empty")
        if len(text) > MAX_PROPOSAL_CHARS:
            raise ValueError(f"proposal text exceeds {MAX_PROPOSAL_CHARS} characters")
        with self._lock:
            proposal_id = "p" + secrets.token_hex(6)
            while proposal_id in self._proposals:
                proposal_id = "p" + secrets.token_hex(6)
            self._ledger.append(
                LedgerEvent.proposal_added(proposal_id, text, session_id, ip, self._clock())
            )
            self._proposals[proposal_id] = _Proposal(proposal_id, text)
            self._tallies[proposal_id] = Tally(proposal_id=proposal_id)
        return proposal_id

    def new_session_token(self) -> str:
        return secrets.token_urlsafe(16)

    def next_for_session(self, session_token: str, ip: str) -> tuple[str, str]:
        """Draw, log the exhibition, and bump eta, atomically."""
        with self._lock:
            pool = [p.proposal_id for p in self._proposals.values() if not p.tombstoned]
            if not pool:
                raise NoProposalsError("no proposals to exhibit")
            session = self._sessions.setdefault(session_token, SessionState(session_token))
            eta_by_id = {pid: self._tallies[pid].eta for pid in pool}
            proposal_id = next_proposal(
                session,
                pool,
                self._rng,
                eta_by_id=eta_by_id,
                balance_exposure=self._config.balance_exposure,
            )
            self._ledger.append(
                LedgerEvent.exhibited(proposal_id, session_token, ip, self._clock())
            )
            self._tallies[proposal_id] = self._tallies[proposal_id].with_exhibition()
            return proposal_id, self._proposals[proposal_id].text

    def cast_vote(self, session_token: str, proposal_id: str, kind: VoteKind, ip: str) -> None:
        """One manifestation per outstanding exhibition, enforced here."""
        with self._lock:
            if self._ledger.outstanding_exhibitions(session_token, proposal_id) < 1:
                raise VoteRejected(
                    "no outstanding exhibition of this proposal for this session"
                )
            try:
                self._ledger.append(
                    LedgerEvent.vote_cast(proposal_id, kind, session_token, ip, self._clock())
                )
            except PrecedenceError as exc:  # outstanding() made this unreachable
                raise VoteRejected(str(exc)) from exc
            self._tallies[proposal_id] = self._tallies[proposal_id].with_vote(kind)

    # -- read surface ---------------------------------------------------

    def ranking(self) -> list[RankingRow]:
        with self._lock:
            tallies = dict(self._tallies)
            policy = self._policy
        return evaluate(tallies, policy)

    def proposal_detail(self, proposal_id: str) -> dict:
        with self._lock:
            if proposal_id not in self._proposals:
                raise KeyError(proposal_id)
            text = self._proposals[proposal_id].text
            tallies = dict(self._tallies)
            policy = self._policy
        tally = tallies[proposal_id]
        row = next(r for r in evaluate(tallies, policy) if r.proposal_id == proposal_id)
        interval = None
        if tally.eta >= 1:
            alpha_ci, gamma_ci = confidence_interval(tally, level=0.95)
            interval = {
                "level": 0.95,
                "alpha": {"lower": alpha_ci.lower, "upper": alpha_ci.upper, "stderr": alpha_ci.stderr},
                "gamma": {"lower": gamma_ci.lower, "upper": gamma_ci.upper, "stderr": gamma_ci.stderr},
            }
        return {
            "proposal_id": proposal_id,
            "text": text,
            "tally": {
                "v_plus": tally.v_plus,
                "v_minus": tally.v_minus,
                "v_zero": tally.v_zero,
                "eta": tally.eta,
            },
            "indexes": {"alpha": row.alpha, "gamma": row.gamma},
            "interval": interval,
            "classification": {
                "sampled": row.sampled,
                "relevant": row.relevant,
                "verdict": row.verdict,
                "prioritized": row.prioritized,
            },
        }

    # -- manager surface ------------------------------------------------

    def anomalies(self) -> list[AnomalyFlag]:
        with self._lock:
            events = self._ledger.events()
            policy = self._config.anomalies
        return flag_anomalies(events, policy)

    def update_thresholds(self, changes: dict) -> ThresholdPolicy:
        """Replace the policy; takes effect on the next ranking snapshot."""
        allowed = {"alpha_bar", "gamma_bar", "eta_bar", "fraction", "dynamic"}
        unknown = set(changes) - allowed
        if unknown:
            raise InvariantViolation(f"unknown threshold fields: {sorted(unknown)}")
        with self._lock:
            current = self._policy
            eta_bar = current.eta_bar
            fraction = current.sampling_fraction
            if "eta_bar" in changes:
                eta_bar, fraction = changes["eta_bar"], None
            if "fraction" in changes:
                fraction = changes["fraction"]
                if fraction is not None:
                    eta_bar = None
            updated = ThresholdPolicy(
                gamma_bar=changes.get("gamma_bar", current.gamma_bar),
                alpha_bar=changes.get("alpha_bar", current.alpha_bar),
                eta_bar=eta_bar,
                sampling_fraction=fraction,
                dynamic=bool(changes.get("dynamic", current.dynamic)),
            )
            self._policy = updated
        log.info("thresholds updated: %s", updated)
        return updated

    def current_policy(self) -> ThresholdPolicy:
        with self._lock:
            return self._policy

    def tombstone(self, proposal_id: str) -> None:
        """Hide from exhibition; the ledger and ranking keep the history."""
        with self._lock:
            if proposal_id not in self._proposals:
                raise KeyError(proposal_id)
            self._proposals[proposal_id].tombstoned = True
        log.info("proposal %s tombstoned", proposal_id)

    def close(self) -> None:
        self._ledger.close()


def _policy_payload(policy: ThresholdPolicy) -> dict:
    return {
        "alpha_bar": policy.alpha_bar,
        "gamma_bar": policy.gamma_bar,
        "eta_bar": policy.eta_bar,
        "fraction": policy.sampling_fraction,
        "dynamic": policy.dynamic,
    }


def create_app(service: VotingService) -> FastAPI:
    """Wire a VotingService into a FastAPI application."""
    config = service._config
    app = FastAPI(title="contivote", docs_url=None, redoc_url=None)
    app.state.service = service
    # The browser UI may be hosted anywhere; voters are unauthenticated
    # and the admin secret travels in a header, so open CORS is safe here.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def client_ip(request: Request) -> str:
        if config.trusted_proxy:
            forwarded = request.headers.get("x-forwarded-for")
            if forwarded:
                return forwarded.split(",")[0].strip()
        return request.client.host if request.client else "unknown"

    def session_token(request: Request) -> str | None:
        return request.headers.get(SESSION_HEADER) or request.cookies.get(SESSION_COOKIE)

    def error(status: int, message: str) -> JSONResponse:
        return JSONResponse(status_code=status, content={"error": message})

    async def json_body(request: Request) -> dict | None:
        try:
            body = await request.json()
        except Exception:
            return None
        return body if isinstance(body, dict) else None

    def admin_guard(request: Request) -> JSONResponse | None:
        token = request.headers.get(ADMIN_HEADER, "")
        if not config.admin_token or token != config.admin_token:
            return error(401, "bad admin token")
        return None

    @app.post("/proposals", status_code=201)
    async def post_proposal(request: Request):
        body = await json_body(request)
        if body is None or not isinstance(body.get("text"), str):
            return error(400, "body must be a JSON object with a text field")
        token = session_token(request) or NO_SESSION
        try:
            proposal_id = service.add_proposal(body["text"], token, client_ip(request))
        except ValueError as exc:
            return error(400, str(exc))
        return JSONResponse(status_code=201, content={"proposal_id": proposal_id})

    @app.get("/next")
    async def get_next(request: Request):
        token = session_token(request) or service.new_session_token()
        try:
            proposal_id, text = service.next_for_session(token, client_ip(request))
        except NoProposalsError:
            return error(404, "no proposals exist yet")
        response = JSONResponse(
            content={"proposal_id": proposal_id, "text": text, "session_token": token}
        )
        response.set_cookie(SESSION_COOKIE, token, httponly=True, samesite="lax")
        return response

    @app.post("/votes", status_code=204)
    async def post_vote(request: Request):
        body = await json_body(request)
        if body is None:
            return error(400, "body must be a JSON object")
        try:
            kind = VoteKind(body.get("kind"))
        except ValueError:
            return error(400, f"kind must be one of {[k.value for k in VoteKind]}")
        proposal_id = body.get("proposal_id")
        if not isinstance(proposal_id, str):
            return error(400, "proposal_id must be a string")
        token = session_token(request)
        if token is None:
            return error(409, "no session: fetch /next first")
        try:
            service.cast_vote(token, proposal_id, kind, client_ip(request))
        except VoteRejected as exc:
            return error(409, str(exc))
        return Response(status_code=204)

    @app.get("/ranking")
    async def get_ranking():
        return [row.to_dict() for row in service.ranking()]

    @app.get("/proposals/{proposal_id}")
    async def get_proposal(proposal_id: str):
        try:
            return service.proposal_detail(proposal_id)
        except KeyError:
            return error(404, f"unknown proposal {proposal_id}")

    @app.get("/admin/anomalies")
    async def get_anomalies(request: Request):
        denied = admin_guard(request)
        if denied is not None:
            return denied
        flags = [
            {
                "ip": f.ip,
                "window_start": f.window_start.isoformat(),
                "window_end": f.window_end.isoformat(),
                "observed_rate": f.observed_rate,
                "rule": f.rule,
                "affected_proposals": list(f.affected_proposals),
            }
            for f in service.anomalies()
        ]
        return {"flags": flags}

    @app.put("/admin/thresholds")
    async def put_thresholds(request: Request):
        denied = admin_guard(request)
        if denied is not None:
            return denied
        body = await json_body(request)
        if body is None:
            return error(422, "body must be a JSON object")
        try:
            updated = service.update_thresholds(body)
        except (InvariantViolation, TypeError) as exc:
            return error(422, str(exc))
        return _policy_payload(updated)

    @app.get("/admin/thresholds")
    async def get_thresholds(request: Request):
        denied = admin_guard(request)
        if denied is not None:
            return denied
        return _policy_payload(service.current_policy())

    @app.delete("/admin/proposals/{proposal_id}", status_code=204)
    async def delete_proposal(request: Request, proposal_id: str):
        denied = admin_guard(request)
        if denied is not None:
            return denied
        try:
            service.tombstone(proposal_id)
        except KeyError:
            return error(404, f"unknown proposal {proposal_id}")
        return Response(status_code=204)

    return app
