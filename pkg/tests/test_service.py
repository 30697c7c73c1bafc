import random
import threading

import pytest
from fastapi.testclient import TestClient

from contivote.config import ServiceConfig
from contivote.indexes import ThresholdPolicy
from contivote.ledger import read_events, replay
from contivote.ranking import evaluate
from contivote.service import VotingService, create_app

ADMIN = {"X-Admin-Token": "hunter2"}


def make_service(tmp_path, **config_kwargs):
    config_kwargs.setdefault("ledger_path", tmp_path / "ledger.jsonl")
    config_kwargs.setdefault("admin_token", "hunter2")
    config_kwargs.setdefault(
        "thresholds", ThresholdPolicy(eta_bar=2, sampling_fraction=None)
    )
    config = ServiceConfig(**config_kwargs)
    return VotingService(config, rng=random.Random(1234))


@pytest.fixture
def client(tmp_path):
    service = make_service(tmp_path)
    with TestClient(create_app(service)) as c:
        c.service = service
        yield c
    service.close()


def add_proposal(client, text="a proposal"):
    response = client.post("/proposals", json={"text": text})
    assert response.status_code == 201
    return response.json()["proposal_id"]


def fetch_next(client, token=None):
    headers = {"X-Session-Token": token} if token else {}
    response = client.get("/next", headers=headers)
    assert response.status_code == 200
    return response.json()


def cast(client, token, proposal_id, kind):
    return client.post(
        "/votes",
        json={"proposal_id": proposal_id, "kind": kind},
        headers={"X-Session-Token": token},
    )


class TestProposals:
    def test_create_returns_fresh_ids(self, client):
        a = add_proposal(client, "first")
        b = add_proposal(client, "second")
        assert a != b

    def test_empty_text_rejected(self, client):
        assert client.post("/proposals", json={"text": "   "}).status_code == 400
        assert client.post("/proposals", json={}).status_code == 400

    def test_oversized_text_rejected(self, client):
        assert client.post("/proposals", json={"text": "x" * 2001}).status_code == 400
        assert client.post("/proposals", json={"text": "x" * 2000}).status_code == 201

    def test_new_proposal_immediately_exhibitable(self, client):
        pid = add_proposal(client)
        assert fetch_next(client)["proposal_id"] == pid


class TestNext:
    def test_404_when_empty(self, client):
        assert client.get("/next").status_code == 404

    def test_single_proposal_round(self, client):
        pid = add_proposal(client)
        body = fetch_next(client)
        assert body["proposal_id"] == pid
        assert body["text"] == "a proposal"
        assert body["session_token"]
        detail = client.get(f"/proposals/{pid}").json()
        assert detail["tally"]["eta"] == 1

    def test_no_repeats_within_cycle(self, client):
        pids = {add_proposal(client, f"t{i}") for i in range(3)}
        token = "fixed-session"
        for _ in range(4):  # four full cycles
            cycle = [fetch_next(client, token)["proposal_id"] for _ in range(3)]
            assert sorted(cycle) == sorted(pids)


class TestVotes:
    def test_approve_increments_v_plus(self, client):
        pid = add_proposal(client)
        body = fetch_next(client)
        response = cast(client, body["session_token"], pid, "approve")
        assert response.status_code == 204
        detail = client.get(f"/proposals/{pid}").json()
        assert detail["tally"] == {"v_plus": 1, "v_minus": 0, "v_zero": 0, "eta": 1}

    def test_vote_without_exhibition_is_409(self, client):
        pid = add_proposal(client)
        assert cast(client, "stranger", pid, "approve").status_code == 409

    def test_double_vote_same_exhibition_is_409(self, client):
        pid = add_proposal(client)
        token = fetch_next(client)["session_token"]
        assert cast(client, token, pid, "approve").status_code == 204
        assert cast(client, token, pid, "approve").status_code == 409

    def test_bad_kind_is_400(self, client):
        pid = add_proposal(client)
        token = fetch_next(client)["session_token"]
        assert cast(client, token, pid, "meh").status_code == 400

    def test_explicit_indifferent_consumes_exhibition(self, client):
        pid = add_proposal(client)
        token = fetch_next(client)["session_token"]
        assert cast(client, token, pid, "indifferent").status_code == 204
        assert cast(client, token, pid, "indifferent").status_code == 409
        detail = client.get(f"/proposals/{pid}").json()
        assert detail["tally"] == {"v_plus": 0, "v_minus": 0, "v_zero": 1, "eta": 1}


class TestProposalDetail:
    def test_unknown_id_404(self, client):
        assert client.get("/proposals/nope").status_code == 404

    def test_unexhibited_shows_undefined(self, client):
        pid = add_proposal(client)
        detail = client.get(f"/proposals/{pid}").json()
        assert detail["indexes"] == {"alpha": None, "gamma": None}
        assert detail["classification"]["verdict"] == "undetermined"
        assert detail["interval"] is None

    def test_indexes_follow_tally(self, client):
        pid = add_proposal(client)
        for kind in ("approve", "approve", "approve", "disapprove"):
            token = fetch_next(client, "s-fix")["session_token"]
            assert cast(client, "s-fix", pid, kind).status_code == 204
        detail = client.get(f"/proposals/{pid}").json()
        assert detail["indexes"] == {"alpha": 0.5, "gamma": 1.0}
        assert detail["interval"]["level"] == 0.95
        assert detail["interval"]["alpha"]["lower"] <= 0.5 <= detail["interval"]["alpha"]["upper"]


class TestRanking:
    def test_empty(self, client):
        assert client.get("/ranking").json() == []

    def test_matches_offline_evaluation_of_the_ledger(self, client, tmp_path):
        rng = random.Random(5)
        pids = [add_proposal(client, f"prop {i}") for i in range(5)]
        for i in range(120):
            token = f"v{i % 7}"
            body = fetch_next(client, token)
            roll = rng.random()
            if roll < 0.45:
                kind = "approve"
            elif roll < 0.7:
                kind = "disapprove"
            elif roll < 0.85:
                kind = "indifferent"
            else:
                continue  # abandoned exhibition
            assert cast(client, token, body["proposal_id"], kind).status_code == 204
        rows = client.get("/ranking").json()
        events = read_events(tmp_path / "ledger.jsonl")
        expected = evaluate(
            replay(events), ThresholdPolicy(eta_bar=2, sampling_fraction=None)
        )
        assert rows == [r.to_dict() for r in expected]
        # every returned (alpha, gamma) recomputes from its tally
        for row in rows:
            if row["alpha"] is None:
                continue
            detail = client.get(f"/proposals/{row['proposal_id']}").json()
            t = detail["tally"]
            assert row["alpha"] == pytest.approx((t["v_plus"] - t["v_minus"]) / t["eta"], rel=1e-12)
            assert row["gamma"] == pytest.approx((t["v_plus"] + t["v_minus"]) / t["eta"], rel=1e-12)

    def test_fraction_policy_resolves_per_snapshot(self, tmp_path):
        service = make_service(
            tmp_path, thresholds=ThresholdPolicy(sampling_fraction=0.15)
        )
        with TestClient(create_app(service)) as client:
            for i in range(20):
                add_proposal(client, f"p{i}")
            token = "t"
            for _ in range(60):
                fetch_next(client, token)
            rows = client.get("/ranking").json()
            sampled = sum(r["sampled"] for r in rows)
            assert sampled / len(rows) <= 0.15
        service.close()


class TestAdmin:
    def test_401_without_token(self, client):
        assert client.get("/admin/anomalies").status_code == 401
        assert client.put("/admin/thresholds", json={}).status_code == 401
        bad = {"X-Admin-Token": "wrong"}
        assert client.get("/admin/anomalies", headers=bad).status_code == 401

    def test_threshold_update_applies_to_next_snapshot(self, client):
        pid = add_proposal(client)
        for kind in ("approve", "approve", "approve", "disapprove"):
            fetch_next(client, "s")
            assert cast(client, "s", pid, kind).status_code == 204
        # alpha = 0.5: clash under the 0.5 default bar
        assert client.get("/ranking").json()[0]["verdict"] == "clash"
        response = client.put(
            "/admin/thresholds", json={"alpha_bar": 0.4, "gamma_bar": 0.5}, headers=ADMIN
        )
        assert response.status_code == 200
        assert client.get("/ranking").json()[0]["verdict"] == "approved"

    def test_out_of_range_thresholds_422(self, client):
        assert (
            client.put("/admin/thresholds", json={"gamma_bar": 1.5}, headers=ADMIN).status_code
            == 422
        )
        assert (
            client.put("/admin/thresholds", json={"fraction": 0.3}, headers=ADMIN).status_code
            == 422
        )
        assert (
            client.put("/admin/thresholds", json={"nonsense": 1}, headers=ADMIN).status_code
            == 422
        )

    def test_switch_to_fraction_and_back(self, client):
        put = client.put("/admin/thresholds", json={"fraction": 0.2}, headers=ADMIN)
        assert put.json()["eta_bar"] is None and put.json()["fraction"] == 0.2
        put = client.put("/admin/thresholds", json={"eta_bar": 7}, headers=ADMIN)
        assert put.json()["eta_bar"] == 7 and put.json()["fraction"] is None

    def test_anomalies_list_bot(self, client):
        pid = add_proposal(client)
        for i in range(40):
            fetch_next(client, "bot")
            cast(client, "bot", pid, "approve")
        flags = client.get("/admin/anomalies", headers=ADMIN).json()["flags"]
        assert any(f["rule"] == "rate_per_minute" for f in flags)
        assert any(f["rule"] == "votes_per_proposal" for f in flags)

    def test_tombstone_hides_from_exhibition_not_ranking(self, client):
        a = add_proposal(client, "keep")
        b = add_proposal(client, "drop")
        assert client.delete(f"/admin/proposals/{b}", headers=ADMIN).status_code == 204
        drawn = {fetch_next(client, f"s{i}")["proposal_id"] for i in range(10)}
        assert drawn == {a}
        ranked_ids = {r["proposal_id"] for r in client.get("/ranking").json()}
        assert ranked_ids == {a, b}


class TestRestart:
    def test_state_survives_restart_via_replay(self, tmp_path):
        service = make_service(tmp_path)
        with TestClient(create_app(service)) as client:
            pid = add_proposal(client, "persistent")
            fetch_next(client, "s")
            cast(client, "s", pid, "approve")
            before = client.get("/ranking").json()
        service.close()

        reborn = make_service(tmp_path)
        with TestClient(create_app(reborn)) as client:
            assert client.get("/ranking").json() == before
            detail = client.get(f"/proposals/{pid}").json()
            assert detail["text"] == "persistent"
            assert detail["tally"]["v_plus"] == 1
        reborn.close()


class TestConcurrency:
    def test_interleaved_requests_match_replay(self, tmp_path):
        service = make_service(tmp_path)
        app = create_app(service)
        with TestClient(app) as seed_client:
            pids = [add_proposal(seed_client, f"c{i}") for i in range(4)]

        errors = []

        def worker(worker_id):
            try:
                with TestClient(app) as c:
                    token = f"w{worker_id}"
                    rng = random.Random(worker_id)
                    for _ in range(30):
                        body = c.get("/next", headers={"X-Session-Token": token}).json()
                        if rng.random() < 0.8:
                            kind = rng.choice(["approve", "disapprove", "indifferent"])
                            r = c.post(
                                "/votes",
                                json={"proposal_id": body["proposal_id"], "kind": kind},
                                headers={"X-Session-Token": token},
                            )
                            assert r.status_code == 204
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(6)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []

        with service._lock:
            live = dict(service._tallies)
        events = read_events(tmp_path / "ledger.jsonl")
        assert replay(events) == live
        for tally in live.values():
            assert tally.v_plus + tally.v_minus <= tally.eta
        service.close()
