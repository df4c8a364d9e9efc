"""Wire-protocol conformance tests against an in-process application.

Every body that crosses the boundary is validated against the schemas
shared with the toolkit under ``contracts/schemas``.
"""

import pytest
from fastapi.testclient import TestClient
from server_support import (
    assert_valid,
    load_example,
    load_schema,
    recognize_body,
    write_record,
)

from model_server.app import create_app
from model_server.config import NoiseParams, ServerConfig

YEAR_PROPOSAL = {"field": "year", "x_min": 980.0, "y_min": 70.0,
                 "x_max": 1100.0, "y_max": 110.0, "score": 0.94}
STATUTE_PROPOSAL = {"field": "statute", "x_min": 240.0, "y_min": 150.0,
                    "x_max": 420.0, "y_max": 190.0, "score": 0.93}


@pytest.fixture()
def truth_dir(tmp_path):
    root = tmp_path / "truth"
    write_record(root, "doc01", "year", "2019", 0.89,
                 proposals=[YEAR_PROPOSAL])
    write_record(root, "doc01", "statute", "NDPS Act", 0.84,
                 proposals=[STATUTE_PROPOSAL])
    write_record(root, "doc01", "complainant_name", "Amar Prakash", 0.90)
    return root


@pytest.fixture()
def client(truth_dir):
    app = create_app(ServerConfig(truth_dir=truth_dir))
    with TestClient(app) as test_client:
        yield test_client


class TestHealthz:
    def test_ready(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        assert_valid(response.json(), "healthz_response")
        assert response.json() == {"status": "ok"}

    def test_missing_truth_dir_reports_not_ready(self, tmp_path):
        app = create_app(ServerConfig(truth_dir=tmp_path / "absent"))
        with TestClient(app) as client:
            response = client.get("/healthz")
        assert response.status_code == 503
        assert_valid(response.json(), "error_response")
        assert response.json()["error"] == "not-ready"


class TestRecognize:
    def test_zero_noise_returns_ground_truth(self, client):
        response = client.post("/recognize",
                               json=load_example("recognize_request"))
        assert response.status_code == 200
        assert_valid(response.json(), "recognize_response")
        assert response.json() == {"text": "2019", "confidence": 1.0}

    def test_multiword_field(self, client):
        response = client.post(
            "/recognize", json=recognize_body("doc01", "complainant_name"))
        assert response.json() == {"text": "Amar Prakash",
                                   "confidence": 1.0}

    def test_noisy_responses_are_deterministic(self, truth_dir):
        config = ServerConfig(truth_dir=truth_dir,
                              noise=NoiseParams(substitution_rate=0.4,
                                                seed=21))
        with TestClient(create_app(config)) as client:
            body = recognize_body("doc01", "complainant_name")
            first = client.post("/recognize", json=body).json()
            second = client.post("/recognize", json=body).json()
        assert first == second
        assert_valid(first, "recognize_response")
        assert first["text"] != "Amar Prakash"
        assert first["confidence"] < 1.0

    def test_unknown_field_is_404(self, client):
        response = client.post("/recognize",
                               json=recognize_body("doc01", "police_station"))
        assert response.status_code == 404
        assert_valid(response.json(), "error_response")
        assert "police_station" in response.json()["detail"]

    def test_unknown_document_is_404(self, client):
        response = client.post("/recognize",
                               json=recognize_body("doc99", "year"))
        assert response.status_code == 404
        assert "doc99" in response.json()["detail"]

    @pytest.mark.parametrize("mutate", [
        lambda body: body.pop("beam_count"),
        lambda body: body.update(beam_count=0),
        lambda body: body.update(doc_id=""),
        lambda body: body.update(surprise=True),
    ])
    def test_invalid_body_is_400(self, client, mutate):
        body = recognize_body("doc01", "year")
        mutate(body)
        response = client.post("/recognize", json=body)
        assert response.status_code == 400
        assert_valid(response.json(), "error_response")
        assert response.json()["error"] == "invalid request"

    def test_path_escape_is_rejected(self, client):
        response = client.post("/recognize",
                               json=recognize_body("doc01", "../year"))
        assert response.status_code == 400
        assert_valid(response.json(), "error_response")

    def test_malformed_record_is_500(self, tmp_path):
        root = tmp_path / "truth"
        write_record(root, "doc01", "year", "2019", confidence=1.7)
        app = create_app(ServerConfig(truth_dir=root))
        with TestClient(app) as client:
            response = client.post("/recognize",
                                   json=recognize_body("doc01", "year"))
        assert response.status_code == 500
        assert_valid(response.json(), "error_response")
        assert response.json()["error"] == "malformed truth record"


class TestDetect:
    def test_proposals_round_trip(self, client):
        response = client.post("/detect",
                               json=load_example("detect_request"))
        assert response.status_code == 200
        assert_valid(response.json(), "detect_response")
        # records are aggregated in field-name order
        assert response.json() == {"proposals": [STATUTE_PROPOSAL,
                                                 YEAR_PROPOSAL]}

    def test_unknown_document_is_404(self, client):
        response = client.post("/detect", json={"doc_id": "doc99",
                                                "image_b64": ""})
        assert response.status_code == 404
        assert_valid(response.json(), "error_response")

    def test_extra_key_is_400(self, client):
        response = client.post("/detect", json={"doc_id": "doc01",
                                                "image_b64": "", "k": 1})
        assert response.status_code == 400
        assert_valid(response.json(), "error_response")


class TestNeuralMode:
    def test_without_models_everything_is_503(self):
        app = create_app(ServerConfig(mode="neural"))
        with TestClient(app) as client:
            for response in (
                    client.get("/healthz"),
                    client.post("/recognize",
                                json=recognize_body("doc01", "year")),
                    client.post("/detect", json={"doc_id": "doc01",
                                                 "image_b64": ""})):
                assert response.status_code == 503
                assert_valid(response.json(), "error_response")
                assert response.json()["error"] == "not-ready"

    def test_injected_models_serve(self):
        app = create_app(
            ServerConfig(mode="neural"),
            recognizer=lambda body: (f"<{body.field}>", 0.5),
            detector=lambda body: [dict(YEAR_PROPOSAL)])
        with TestClient(app) as client:
            assert client.get("/healthz").json() == {"status": "ok"}
            recognized = client.post(
                "/recognize", json=recognize_body("doc07", "statute"))
            assert recognized.json() == {"text": "<statute>",
                                         "confidence": 0.5}
            detected = client.post("/detect", json={"doc_id": "doc07",
                                                    "image_b64": ""})
            assert_valid(detected.json(), "detect_response")
            assert detected.json()["proposals"] == [YEAR_PROPOSAL]

    def test_out_of_range_model_confidence_is_500(self):
        app = create_app(ServerConfig(mode="neural"),
                         recognizer=lambda body: ("x", 1.4),
                         detector=lambda body: [])
        with TestClient(app) as client:
            response = client.post("/recognize",
                                   json=recognize_body("doc01", "year"))
        assert response.status_code == 500
        assert_valid(response.json(), "error_response")


class TestSharedExamples:
    """The recorded example bodies must satisfy their own schemas."""

    @pytest.mark.parametrize("name", [
        "recognize_request", "recognize_response", "detect_request",
        "detect_response", "healthz_response", "error_response",
    ])
    def test_example_matches_schema(self, name):
        assert_valid(load_example(name), name)

    def test_schemas_forbid_unknown_keys(self):
        for name in ("recognize_request", "recognize_response",
                     "detect_request", "detect_response",
                     "healthz_response", "error_response"):
            assert load_schema(name)["additionalProperties"] is False
