import json
import random
import string

import httpx
import pytest

from dualcheck.domain import DomainError, ManipulationResult, FactCheckResult
from dualcheck.mock_backend import (
    BindError,
    MockProfile,
    MockServer,
    resolve_response,
    seeded_factcheck,
    seeded_manipulation,
    serve_mock,
)
from dualcheck.protocol import FactCheckRequest, ManipulationRequest, factcheck_request_id

from conftest import make_post

SEEDED = MockProfile(mode="seeded", seed=1234)


class TestProfileValidation:
    def test_fixture_mode_requires_table(self):
        with pytest.raises(DomainError):
            MockProfile(mode="fixture")

    def test_seeded_mode_requires_seed(self):
        with pytest.raises(DomainError):
            MockProfile(mode="seeded")

    def test_unknown_mode(self):
        with pytest.raises(DomainError):
            MockProfile(mode="live", seed=1)

    def test_rate_out_of_range(self):
        with pytest.raises(DomainError):
            MockProfile(mode="seeded", seed=1, error_rates={"nei_bias": 1.5})

    def test_unknown_rate_key(self):
        with pytest.raises(DomainError):
            MockProfile(mode="seeded", seed=1, error_rates={"typo_rate": 0.5})

    def test_json_round_trip(self):
        profile = MockProfile(mode="seeded", seed=42, error_rates={"nei_bias": 0.25})
        assert MockProfile.from_dict(json.loads(json.dumps(profile.to_dict()))) == profile


class TestSeededResponses:
    def test_nei_bias_one_forces_nei(self):
        profile = MockProfile(mode="seeded", seed=7, error_rates={"nei_bias": 1.0})
        for i in range(20):
            post = make_post(post_id=f"p{i}")
            body = seeded_factcheck(profile, post, factcheck_request_id(post))
            assert body["verdict"] == "nei"

    def test_miss_rate_one_forces_pristine(self):
        profile = MockProfile(mode="seeded", seed=7, error_rates={"miss_rate": 1.0, "false_alarm_rate": 1.0})
        for i in range(20):
            post = make_post(post_id=f"p{i}")
            body = seeded_manipulation(profile, post, factcheck_request_id(post))
            assert body["klass"] == "pristine" and body["is_fake"] is False

    def test_default_rates_give_pristine(self):
        post = make_post()
        body = seeded_manipulation(SEEDED, post, factcheck_request_id(post))
        assert body["klass"] == "pristine"

    def test_all_seeded_responses_pass_domain_invariants(self):
        profile = MockProfile(mode="seeded", seed=99, error_rates={"false_alarm_rate": 1.0})
        rng = random.Random(5)
        for i in range(300):
            text = " ".join("".join(rng.choices(string.ascii_lowercase, k=4)) for _ in range(rng.randint(1, 9)))
            post = make_post(post_id=f"p{i}", text=text)
            ManipulationResult.from_dict(seeded_manipulation(profile, post, factcheck_request_id(post)))
            FactCheckResult.from_dict(seeded_factcheck(profile, post, factcheck_request_id(post)))

    def test_purity_replaying_random_requests(self):
        # Byte-identical bodies for 1000 replayed random requests.
        profile = MockProfile(mode="seeded", seed=31, error_rates={"nei_bias": 0.3, "false_alarm_rate": 0.6})
        rng = random.Random(17)
        for i in range(1000):
            text = " ".join("".join(rng.choices(string.ascii_lowercase, k=5)) for _ in range(rng.randint(1, 6)))
            post = make_post(post_id=f"rand{i}", text=text, with_image=rng.random() < 0.5)
            rid = factcheck_request_id(post)
            endpoint = rng.choice(["factcheck", "manipulation"])
            first = json.dumps(resolve_response(profile, endpoint, post, rid))
            second = json.dumps(resolve_response(profile, endpoint, post, rid))
            assert first == second

    def test_fixture_takes_precedence_over_seed(self):
        post = make_post(post_id="fixed")
        canned = {"verdict": "refuted", "confidence": 1.0, "evidence": [], "reasoning": [], "tool_trace": []}
        profile = MockProfile(mode="fixture", fixture_table={"fixed": {"factcheck": canned}}, seed=3)
        assert resolve_response(profile, "factcheck", post, "x") == canned
        # Miss falls through to the seeded generator, not the static fallback.
        other = make_post(post_id="other")
        assert resolve_response(profile, "factcheck", other, factcheck_request_id(other))["reasoning"][0].startswith(
            "seeded mock"
        )


class TestServer:
    def test_health(self, fixture_mock_server):
        response = httpx.get(f"{fixture_mock_server.base_url}/v1/health", timeout=5)
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_stats_counts_requests(self):
        with serve_mock(SEEDED) as server:
            req = FactCheckRequest(make_post(post_id="s1")).to_dict()
            for _ in range(2):
                assert httpx.post(f"{server.base_url}/v1/factcheck", json=req, timeout=5).status_code == 200
            stats = httpx.get(f"{server.base_url}/v1/stats", timeout=5).json()
            assert stats["factcheck_requests"] == 2
            assert stats["manipulation_requests"] == 0

    def test_fixture_lookup_and_miss_fallback(self, fixture_mock_server):
        base = fixture_mock_server.base_url
        hit = httpx.post(f"{base}/v1/factcheck", json=FactCheckRequest(load_post("c005")).to_dict(), timeout=5)
        assert hit.json()["verdict"] == "refuted"
        assert hit.json()["evidence"]
        unknown = make_post(post_id="never-heard-of-it")
        miss_fc = httpx.post(f"{base}/v1/factcheck", json=FactCheckRequest(unknown).to_dict(), timeout=5)
        assert miss_fc.json()["verdict"] == "nei"
        miss_m = httpx.post(f"{base}/v1/manipulation", json=ManipulationRequest(unknown).to_dict(), timeout=5)
        assert miss_m.json()["klass"] == "pristine"

    def test_http_determinism_byte_identical(self):
        with serve_mock(MockProfile(mode="seeded", seed=8, error_rates={"nei_bias": 0.5})) as server:
            req = FactCheckRequest(make_post(post_id="p7")).to_dict()
            first = httpx.post(f"{server.base_url}/v1/factcheck", json=req, timeout=5)
            second = httpx.post(f"{server.base_url}/v1/factcheck", json=req, timeout=5)
            assert first.content == second.content

    def test_bad_request_id_is_400(self):
        with serve_mock(SEEDED) as server:
            req = FactCheckRequest(make_post()).to_dict()
            req["request_id"] = "0" * 64
            response = httpx.post(f"{server.base_url}/v1/factcheck", json=req, timeout=5)
            assert response.status_code == 400
            assert "error" in response.json()

    def test_malformed_body_is_400(self):
        with serve_mock(SEEDED) as server:
            response = httpx.post(
                f"{server.base_url}/v1/factcheck",
                content=b"{oops",
                headers={"Content-Type": "application/json"},
                timeout=5,
            )
            assert response.status_code == 400

    def test_unknown_path_is_404(self):
        with serve_mock(SEEDED) as server:
            assert httpx.get(f"{server.base_url}/v1/nope", timeout=5).status_code == 404

    def test_bind_error_on_taken_port(self):
        with serve_mock(SEEDED) as server:
            with pytest.raises(BindError):
                MockServer(SEEDED, port=server.port)


def load_post(post_id):
    from dualcheck.ingest import load_fixture_claims

    for record in load_fixture_claims():
        if record.post.id == post_id:
            return record.post
    raise KeyError(post_id)
