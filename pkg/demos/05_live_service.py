"""The whole process over HTTP, in-process via the test client.

For a real deployment use the CLI instead:

    contivote serve --config config.json

then point voters at /next and /votes, and the dashboard at /ranking.
"""

import random
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from contivote.config import ServiceConfig
from contivote.indexes import ThresholdPolicy
from contivote.service import VotingService, create_app

config = ServiceConfig(
    ledger_path=Path(tempfile.mkdtemp()) / "ledger.jsonl",
    admin_token="demo-secret",
    thresholds=ThresholdPolicy(eta_bar=3, sampling_fraction=None),
)
service = VotingService(config, rng=random.Random(0))

with TestClient(create_app(service)) as client:
    # voters submit proposals mid-process, no login anywhere
    for text in ("shaded bus stops", "car-free sundays", "later library hours"):
        r = client.post("/proposals", json={"text": text})
        print("created", r.json()["proposal_id"], "->", text)

    # a handful of voters: fetch one proposal at a time, answer or skip
    rng = random.Random(1)
    for i in range(40):
        token = f"voter-{i % 6}"
        shown = client.get("/next", headers={"X-Session-Token": token}).json()
        roll = rng.random()
        if roll < 0.75:
            kind = "approve" if roll < 0.5 else ("disapprove" if roll < 0.6 else "indifferent")
            client.post(
                "/votes",
                json={"proposal_id": shown["proposal_id"], "kind": kind},
                headers={"X-Session-Token": token},
            )

    print("\nlive ranking:")
    for row in client.get("/ranking").json():
        alpha = "-" if row["alpha"] is None else f"{row['alpha']:+.2f}"
        print(f"  {row['proposal_id']}  alpha={alpha}  eta={row['eta']:>2}  "
              f"verdict={row['verdict']:<12} prioritized={row['prioritized']}")

    # managers steer thresholds at runtime; the next snapshot uses them
    client.put(
        "/admin/thresholds",
        json={"alpha_bar": 0.1},
        headers={"X-Admin-Token": "demo-secret"},
    )
    verdicts = {r["proposal_id"]: r["verdict"] for r in client.get("/ranking").json()}
    print("\nafter lowering the approval bar to 0.1:", verdicts)

service.close()
print(f"\nevery event landed in {config.ledger_path}")
print("replay it offline with: contivote rank --ledger", config.ledger_path)
