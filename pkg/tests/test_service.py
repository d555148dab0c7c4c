import json

import pytest

fastapi_testclient = pytest.importorskip("fastapi.testclient")
TestClient = fastapi_testclient.TestClient

from evtrial.core import OutcomePair
from evtrial.design import DesignAlternative
from evtrial.service import create_app
from evtrial.session import session_new, session_summary, session_update_batch


@pytest.fixture()
def client():
    return TestClient(create_app(compare_rep_cap=2000))


def make_session(client, **overrides):
    body = {
        "session_id": "s1",
        "design": {"p_treatment": 0.45, "p_control": 0.30, "alpha": 0.025},
    }
    body.update(overrides)
    r = client.post("/sessions", json=body)
    assert r.status_code == 201, r.text
    return r.json()


def batch_body(pairs, start=1):
    return {
        "pairs": [
            {"pair_index": i, "x_treatment": a, "x_control": b}
            for i, (a, b) in enumerate(pairs, start=start)
        ]
    }


class TestDesignEndpoint:
    def test_base_design(self, client):
        r = client.post(
            "/design",
            json={"p_treatment": 0.45, "p_control": 0.30, "alpha": 0.025},
        )
        doc = r.json()
        assert r.status_code == 200
        assert doc["lambda_star"] == pytest.approx(0.3125, abs=1e-9)
        assert doc["expected_pairs"] == pytest.approx(155, abs=0.5)
        assert len(doc["grid"]) > 50

    def test_null_alternative(self, client):
        r = client.post("/design", json={"p_treatment": 0.3, "p_control": 0.3})
        assert r.json()["warning"].startswith("no power")

    def test_validation_400(self, client):
        r = client.post("/design", json={"p_treatment": 1.2, "p_control": 0.3})
        assert r.status_code == 400


class TestSessionEndpoints:
    def test_create_fresh(self, client):
        doc = make_session(client)
        assert doc["n"] == 0
        assert doc["e_value"] == pytest.approx(1.0)
        assert (doc["cs"]["lo"], doc["cs"]["hi"]) == (-1.0, 1.0)

    def test_batch_and_terminal_409(self, client):
        make_session(client, bet=0.5, design={
            "p_treatment": 0.45, "p_control": 0.30, "alpha": 0.1,
        })
        r = client.post("/sessions/s1/batch", json=batch_body([(1, 0)] * 10))
        doc = r.json()
        assert doc["decision"] == "reject_efficacy"
        # 1.5^6 = 11.39 >= 10 at the 6th straight win
        assert doc["n"] == 6
        r = client.post(
            "/sessions/s1/batch", json=batch_body([(1, 0)], start=doc["n"] + 1)
        )
        assert r.status_code == 409

    def test_index_conflict_409(self, client):
        make_session(client)
        r = client.post("/sessions/s1/batch", json=batch_body([(1, 0)], start=5))
        assert r.status_code == 409

    def test_malformed_outcome_400(self, client):
        make_session(client)
        r = client.post(
            "/sessions/s1/batch",
            json={"pairs": [{"pair_index": 1, "x_treatment": 2, "x_control": 0}]},
        )
        assert r.status_code == 400

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404
        assert client.post("/sessions/nope/batch", json=batch_body([])).status_code == 404

    def test_get_returns_trajectory(self, client):
        make_session(client)
        client.post("/sessions/s1/batch", json=batch_body([(1, 0), (0, 1), (1, 1)]))
        doc = client.get("/sessions/s1").json()
        assert [p["n"] for p in doc["trajectory"]] == [1, 2, 3]
        assert doc["trajectory"][0]["cs_hi"] <= 1.0

    def test_delete(self, client):
        make_session(client)
        assert client.delete("/sessions/s1").status_code == 204
        assert client.get("/sessions/s1").status_code == 404

    def test_duplicate_create_409(self, client):
        make_session(client)
        r = client.post(
            "/sessions",
            json={"session_id": "s1",
                  "design": {"p_treatment": 0.4, "p_control": 0.3}},
        )
        assert r.status_code == 409

    def test_cli_api_equivalence(self, client):
        # the same ledger produces an identical summary through either surface
        import numpy as np

        rng = np.random.default_rng(10)
        pairs = [
            (int(a), int(b))
            for a, b in zip(rng.random(50) < 0.45, rng.random(50) < 0.30)
        ]
        make_session(client)
        client.post("/sessions/s1/batch", json=batch_body(pairs))
        api = client.get("/sessions/s1").json()

        sess = session_new("s1", DesignAlternative(0.45, 0.30, alpha=0.025))
        sess, _, _ = session_update_batch(sess, [OutcomePair(a, b) for a, b in pairs])
        lib = session_summary(sess)
        for key in ("n", "log_e", "av_p"):
            assert api[key] == pytest.approx(lib[key])
        assert api["cs"] == pytest.approx(lib["cs"])


class TestCompareEndpoint:
    CONFIG = {"p_c": 0.3, "p_t_alt": 0.45, "reps": 400, "calibration_reps": 400,
              "rules": ["evalue", "gs"]}

    def test_report(self, client):
        r = client.post("/compare", json={"config": self.CONFIG, "seed": 3})
        doc = r.json()
        assert r.status_code == 200
        assert {row["rule"] for row in doc["results"]} == {"evalue(0.3125)", "gs_calibrated"}

    def test_rep_cap_413(self, client):
        config = dict(self.CONFIG, reps=100000)
        r = client.post("/compare", json={"config": config, "seed": 3})
        assert r.status_code == 413

    def test_single_rule_projection(self, client):
        config = dict(self.CONFIG, rules=["naive_p"])
        r = client.post("/compare", json={"config": config, "seed": 3})
        assert len(r.json()["results"]) == 1

    def test_reduced_rep_power_near_full_scale(self):
        # a capped interactive run stays within a few MC SEs of the
        # full-scale e-value power
        client = TestClient(create_app(compare_rep_cap=10000))
        config = {"p_c": 0.3, "p_t_alt": 0.45, "reps": 5000,
                  "calibration_reps": 5000, "rules": ["evalue"]}
        r = client.post("/compare", json={"config": config, "seed": 29})
        row = r.json()["results"][0]
        assert abs(row["alt_rej"] - 0.723) <= 4 * row["se_alt"]

    def test_progress_stream(self, client):
        r = client.post(
            "/compare", json={"config": self.CONFIG, "seed": 3, "stream": True}
        )
        lines = [json.loads(ln) for ln in r.text.strip().splitlines()]
        assert all(ev["total"] == 400 for ev in lines)
        assert lines[-1]["done"] == 400
        assert "report" in lines[-1]
        assert all("partial_rates" in ev for ev in lines[:-1])
