"""
API endpoint tests.
"""
import pytest
from fastapi.testclient import TestClient

from main import app


client = TestClient(app)


class TestHealthEndpoints:
    """Test health check endpoints."""

    def test_root_endpoint(self):
        response = client.get("/")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_health_endpoint(self):
        """Test /health endpoint."""
        response = client.get("/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_process_time_header(self):
        response = client.get("/health")
        assert "X-Process-Time" in response.headers


class TestProtocolEndpoint:
    """Test /protocol endpoint."""

    def test_flagship_report(self):
        response = client.post("/protocol", json={"va": 1.5, "vb": 2.0, "x": 1.041, "measure": True})
        assert response.status_code == 200
        data = response.json()
        assert data["nu"] == pytest.approx(0.9571, abs=5e-4)
        assert data["nu_m"] == pytest.approx(0.9421, abs=5e-4)
        assert data["params"]["x_sep"] == pytest.approx(0.2043, abs=5e-4)
        assert data["local_states"]["squeezing_factor"] == pytest.approx(0.6387, abs=5e-4)

    def test_squeezing_form(self):
        response = client.post("/protocol", json={"d": 0.274653, "r": 0.0719205})
        assert response.status_code == 200
        assert response.json()["nu_m"] is None

    def test_both_forms_rejected(self):
        response = client.post("/protocol", json={"d": 0.3, "r": 0.1, "va": 1.5, "vb": 2.0})
        assert response.status_code == 422

    def test_incomplete_pair_rejected(self):
        response = client.post("/protocol", json={"d": 0.3})
        assert response.status_code == 422

    def test_constraint_violation(self):
        """Swapped variances surface as a toolkit error."""
        response = client.post("/protocol", json={"va": 2.0, "vb": 1.5})
        assert response.status_code == 422
        data = response.json()
        assert data["error"] == "ParameterError"
        assert "requires vB > vA" in data["detail"]


class TestThresholdEndpoint:
    """Test /threshold endpoint."""

    def test_flagship_threshold(self):
        response = client.post("/threshold", json={"d": 0.274653, "r": 0.0719205})
        assert response.status_code == 200
        data = response.json()
        assert data["step"] == 2
        assert data["x_th"] == pytest.approx(1.04, abs=0.01)

    def test_invalid_step(self):
        response = client.post("/threshold", json={"d": 0.3, "r": 0.1, "step": 4})
        assert response.status_code == 422


class TestRobustnessEndpoint:
    """Test /robustness endpoint."""

    def test_noise_scan(self):
        response = client.post(
            "/robustness",
            json={"va": 1.5, "vb": 2.0, "x": 1.041, "epsilons": [0.0, 0.02]},
        )
        assert response.status_code == 200
        rows = response.json()
        assert [row["epsilon"] for row in rows] == [0.0, 0.02]
        assert rows[1]["nu"] == pytest.approx(0.9787, abs=5e-4)

    def test_negative_noise(self):
        response = client.post("/robustness", json={"va": 1.5, "vb": 2.0, "epsilons": [-0.1]})
        assert response.status_code == 422
