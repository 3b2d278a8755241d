import math

import pytest

from app import app


@pytest.fixture
def client():
    app.config["TESTING"] = True
    with app.test_client() as client:
        yield client


def test_classify(client):
    response = client.get("/api/classify?kappa=0.5&c_hat=0,0,1")
    assert response.status_code == 200
    body = response.get_json()
    assert body["success"] is True
    assert body["data"]["class"] == "Iso2_0"
    assert body["data"]["orbit"] == 6


def test_classify_outside_tetrahedron_is_400(client):
    response = client.get("/api/classify?kappa=1&c_hat=1,1,1")
    assert response.status_code == 400
    body = response.get_json()
    assert body["success"] is False
    assert "tetrahedron" in body["error"]


def test_classify_requires_kappa(client):
    assert client.get("/api/classify").status_code == 400
    assert client.get("/api/classify?kappa=abc").status_code == 400


def test_mi(client):
    response = client.get(f"/api/mi?kappa={math.sqrt(3.0)!r}&n=1,0,0&m=1,0,0")
    data = response.get_json()["data"]
    assert data["I"] == pytest.approx(1.0)
    assert data["x"] == pytest.approx(-1.0)
    assert data["p"][0][0] == pytest.approx(0.0, abs=1e-12)
    assert client.get("/api/mi?kappa=0.5&n=1,0,0").status_code == 400


def test_rsp_eval(client):
    response = client.get("/api/rsp-eval?lambda=0.8&target=1,0,0&beta=0,0,1")
    assert response.status_code == 200
    data = response.get_json()["data"]
    assert data["useful"] is True
    assert 0.0 < data["F_U"] < 1.0


def test_rsp_eval_bad_task(client):
    response = client.get("/api/rsp-eval?kappa=0.5&target=1,0,0&beta=1,1,0")
    assert response.status_code == 400


def test_figure(client):
    response = client.get("/api/figure/1?step=0.5")
    assert response.status_code == 200
    data = response.get_json()["data"]
    assert data["columns"] == ["kappa", "I_2iso0", "I_3iso"]
    assert len(data["rows"]) == 3
    assert client.get("/api/figure/9").status_code == 400


def test_config(client):
    data = client.get("/api/config").get_json()["data"]
    assert {"quad-theta", "quad-phi", "seed", "format"} <= set(data)
