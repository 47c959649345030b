import json
import random

import pytest
from fastapi.testclient import TestClient

from fedirec.federation import FederationClient, SimulatedBackend
from fedirec.graph import build_snapshot
from fedirec.interleaving import OnlineExperiment
from fedirec.service import create_app
from tests.conftest import users


@pytest.fixture
def api():
    refs = users(14, prefix="m", instance="sim.test")
    rng = random.Random(8)
    edges = [
        (refs[i], refs[j])
        for i in range(14)
        for j in range(14)
        if i != j and rng.random() < 0.3
    ]
    g = build_snapshot(edges, visited=refs)
    experiment = OnlineExperiment(
        FederationClient(SimulatedBackend(g)), master_seed=11, walk_iterations=80
    )
    return TestClient(create_app(experiment)), refs, experiment


def open_session(client, target, n=8):
    resp = client.post("/api/sessions", json={"target": target.canonical, "n": n})
    assert resp.status_code == 201
    return resp.json()


class TestCreateSession:
    def test_valid_target_returns_ranked_items(self, api):
        client, refs, _ = api
        doc = open_session(client, refs[0])
        assert set(doc) == {"session_id", "n", "items"}
        assert doc["n"] == len(doc["items"]) > 0
        ranks = [item["display_rank"] for item in doc["items"]]
        assert ranks == list(range(1, doc["n"] + 1))
        for item in doc["items"]:
            assert set(item) == {"userref", "display_rank"}
            assert "@" in item["userref"]

    def test_payload_is_blind_to_system_origin(self, api):
        """No field anywhere in the response names a recommender."""
        client, refs, _ = api
        resp = client.post("/api/sessions", json={"target": refs[1].canonical, "n": 8})
        raw = json.dumps(resp.json()).lower()
        for leak in ("cf", "ppr", "combined", "pagerank", "system",
                     "list_a", "list_b", "coin", "score"):
            assert leak not in raw

    def test_malformed_target_is_400(self, api):
        client, _, _ = api
        resp = client.post("/api/sessions", json={"target": "no-at-sign"})
        assert resp.status_code == 400

    def test_unknown_target_is_502(self, api):
        client, _, _ = api
        resp = client.post("/api/sessions", json={"target": "ghost@sim.test"})
        assert resp.status_code == 502

    def test_missing_body_field_is_422(self, api):
        client, _, _ = api
        assert client.post("/api/sessions", json={}).status_code == 422

    def test_default_n_is_ten(self, api):
        client, refs, experiment = api
        resp = client.post("/api/sessions", json={"target": refs[2].canonical})
        session = experiment.store.get(resp.json()["session_id"])
        assert session.requested_n == 10


class TestClicks:
    def test_click_returns_204_and_is_recorded(self, api):
        client, refs, experiment = api
        doc = open_session(client, refs[0])
        item = doc["items"][0]["userref"]
        resp = client.post(f"/api/sessions/{doc['session_id']}/clicks",
                           json={"item": item})
        assert resp.status_code == 204
        assert len(experiment.store.get(doc["session_id"]).clicks) == 1

    def test_duplicate_click_still_204_single_record(self, api):
        client, refs, experiment = api
        doc = open_session(client, refs[0])
        item = doc["items"][1]["userref"]
        url = f"/api/sessions/{doc['session_id']}/clicks"
        assert client.post(url, json={"item": item}).status_code == 204
        assert client.post(url, json={"item": item}).status_code == 204
        assert len(experiment.store.get(doc["session_id"]).clicks) == 1

    def test_unknown_session_is_404(self, api):
        client, _, _ = api
        resp = client.post("/api/sessions/deadbeef/clicks",
                           json={"item": "m00@sim.test"})
        assert resp.status_code == 404

    def test_foreign_item_is_400(self, api):
        client, refs, _ = api
        doc = open_session(client, refs[0])
        resp = client.post(f"/api/sessions/{doc['session_id']}/clicks",
                           json={"item": "stranger@sim.test"})
        assert resp.status_code == 400

    def test_click_after_close_is_409(self, api):
        client, refs, _ = api
        doc = open_session(client, refs[0])
        item = doc["items"][0]["userref"]
        client.post(f"/api/sessions/{doc['session_id']}/close")
        resp = client.post(f"/api/sessions/{doc['session_id']}/clicks",
                           json={"item": item})
        assert resp.status_code == 409


class TestClose:
    def test_close_reports_outcome(self, api):
        client, refs, _ = api
        doc = open_session(client, refs[0])
        client.post(f"/api/sessions/{doc['session_id']}/clicks",
                    json={"item": doc["items"][0]["userref"]})
        resp = client.post(f"/api/sessions/{doc['session_id']}/close")
        assert resp.status_code == 200
        assert resp.json()["outcome"] in {"A_WINS", "B_WINS", "DRAW"}

    def test_close_without_clicks_is_no_interaction(self, api):
        client, refs, _ = api
        doc = open_session(client, refs[3])
        resp = client.post(f"/api/sessions/{doc['session_id']}/close")
        assert resp.json()["outcome"] == "NO_INTERACTION"

    def test_unknown_session_close_is_404(self, api):
        client, _, _ = api
        assert client.post("/api/sessions/deadbeef/close").status_code == 404


class TestSummary:
    def test_empty_experiment_summary(self, api):
        client, _, _ = api
        resp = client.get("/api/experiment/summary")
        assert resp.status_code == 200
        assert resp.json() == {
            "participants": 0,
            "a_superior": 0,
            "b_superior": 0,
            "draws": 0,
            "no_interaction": 0,
            "total_clicks": 0,
            "mean_follows": 0.0,
        }

    def test_summary_tracks_sessions(self, api):
        client, refs, _ = api
        for target in (refs[0], refs[1]):
            doc = open_session(client, target)
            client.post(f"/api/sessions/{doc['session_id']}/clicks",
                        json={"item": doc["items"][0]["userref"]})
            client.post(f"/api/sessions/{doc['session_id']}/close")
        doc = open_session(client, refs[4])
        client.post(f"/api/sessions/{doc['session_id']}/close")

        summary = client.get("/api/experiment/summary").json()
        assert summary["participants"] == 3
        assert summary["no_interaction"] == 1
        assert summary["total_clicks"] == 2
        assert summary["mean_follows"] == pytest.approx(2 / 3)
        decided = (summary["a_superior"] + summary["b_superior"] + summary["draws"])
        assert decided == 2
