"""A9 — wire conformance between the attack engine's remote client and this
server, exercised over real HTTP on a loopback socket."""

import base64

import numpy as np
import pytest
import requests

from mesampler.oracle import OracleProtocolError, RemoteOracle
from mesampler.tensor import ShapeMismatchError

from model_server.models import EchoModel


LOGITS = [0.1, -7.25, 3.0, 0.0078125]
SHAPE = (2, 4, 4, 3)


@pytest.fixture
def echo_url(live_server):
    return live_server(model=EchoModel(LOGITS, expected_shape=SHAPE))


def test_a9_wire_conformance(echo_url):
    oracle = RemoteOracle(echo_url, retries=0)

    # /v1/info respected end to end
    assert oracle.num_classes == len(LOGITS)
    assert oracle.expected_shape == SHAPE
    assert oracle.model_id == "echo"

    # logits round-trip bit-exactly through base64 + JSON
    out = oracle.query(np.random.default_rng(0).uniform(0, 1, SHAPE))
    assert out.dtype == np.float64
    assert np.array_equal(out, np.array(LOGITS, dtype=np.float64))
    assert oracle.query_count == 1

    # malformed shape refused with 400 on the wire
    payload = np.zeros((1, 4, 4, 3), dtype="<f4")
    resp = requests.post(
        echo_url + "/v1/logits",
        json={
            "shape": [1, 4, 4, 3],
            "dtype": "f32le",
            "data": base64.b64encode(payload.tobytes()).decode(),
        },
        timeout=10,
    )
    assert resp.status_code == 400
    assert "error" in resp.json()

    # the client refuses the same mismatch before spending a query
    with pytest.raises(ShapeMismatchError):
        oracle.query(np.zeros((1, 4, 4, 3)))
    assert oracle.query_count == 1

    print("PASS A9 — remote client round-trips logits bit-exactly; "
          "malformed shape -> 400; /v1/info num_classes respected")


def test_a9_empty_logits_vector_rejected_by_client(live_server):
    # a server advertising zero classes violates the session contract
    class NullEcho(EchoModel):
        def __init__(self):
            super().__init__([1.0])
            self.num_classes = 0

    url = live_server(model=NullEcho())
    with pytest.raises(OracleProtocolError):
        RemoteOracle(url, retries=0)


def test_a9_attack_runs_against_live_server(live_server):
    """Full integration: the PGD loop drives a remote linear model."""
    from mesampler.attack import AttackConfig, run_attack
    from model_server.models import SeededLinearModel

    shape = (1, 4, 4, 3)
    model = SeededLinearModel(shape, num_classes=2, seed=3, scale=4.0)
    x0 = np.full(shape, 0.5)
    label = int(np.argmax(model.logits(x0)))
    url = live_server(model=model)

    oracle = RemoteOracle(url, retries=1)
    res = run_attack(x0, label, oracle,
                     AttackConfig(estimator="bandits_plain", seed=5, budget=400))
    assert res.queries_used == oracle.query_count
    assert res.linf <= 0.03 + 1e-6
    if res.success:
        assert res.final_label != label
