"""Black-box model contract: video in, logits out, every query counted.

Ships two deterministic toy models used throughout the test suite (a linear
softmax with known analytic gradients and a motion-sensitive two-class
model) plus an HTTP client for remote model servers speaking the
``/v1/logits`` wire protocol.
"""

from __future__ import annotations

import base64
import time

import numpy as np

from .tensor import ShapeMismatchError


class OracleError(Exception):
    """Base class for oracle failures."""


class OracleProtocolError(OracleError):
    """The remote peer answered, but not with a valid response."""


class OracleTransportError(OracleError):
    """The remote peer could not be reached (after retries)."""


class Oracle:
    """Query-counted logits oracle.

    Subclasses implement ``_logits``; ``query`` validates the input shape,
    bumps the counter and delegates. The counter moves by exactly one per
    accepted query.
    """

    def __init__(self, num_classes: int, expected_shape=None):
        if num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {num_classes}")
        self.num_classes = int(num_classes)
        self.expected_shape = tuple(expected_shape) if expected_shape else None
        self.query_count = 0

    def _check_shape(self, video: np.ndarray) -> None:
        if self.expected_shape and video.shape != self.expected_shape:
            raise ShapeMismatchError(
                f"oracle expects shape {self.expected_shape}, got {video.shape}"
            )

    def query(self, video) -> np.ndarray:
        video = np.asarray(video, dtype=np.float64)
        self._check_shape(video)
        self.query_count += 1
        return self._logits(video)

    def _logits(self, video: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, video) -> int:
        return int(np.argmax(self.query(video)))


class ToyLinearSoftmax(Oracle):
    """logits = W @ flatten(x) + b, with W exposed for analytic gradients."""

    def __init__(self, weights, bias, expected_shape):
        weights = np.asarray(weights, dtype=np.float64)
        bias = np.asarray(bias, dtype=np.float64).ravel()
        if weights.ndim != 2 or weights.shape[0] != bias.size:
            raise ValueError(
                f"weights must be (K, D) matching bias length, got "
                f"{weights.shape} and {bias.size}"
            )
        expected = tuple(expected_shape)
        if int(np.prod(expected)) != weights.shape[1]:
            raise ValueError(
                f"expected_shape {expected} does not flatten to D={weights.shape[1]}"
            )
        super().__init__(weights.shape[0], expected)
        self.weights = weights
        self.bias = bias

    @classmethod
    def from_seed(cls, expected_shape, num_classes: int = 2, seed: int = 0,
                  scale: float = 1.0):
        d = int(np.prod(expected_shape))
        rng = np.random.default_rng(seed)
        w = rng.normal(0.0, scale / np.sqrt(d), size=(num_classes, d))
        b = rng.normal(0.0, 0.01, size=num_classes)
        return cls(w, b, expected_shape)

    def _logits(self, video: np.ndarray) -> np.ndarray:
        return self.weights @ video.ravel() + self.bias

    def gradient_rows(self) -> np.ndarray:
        """Analytic d logit_k / dx as (K, V, H, W, C)."""
        return self.weights.reshape((self.num_classes,) + self.expected_shape)


class ToyMotionSensitive(Oracle):
    """Two-class toy whose class-0 score depends only on moving-region pixels.

    ``masks`` flags the moving region per frame; logits are the gain-scaled
    means of the video over the moving region and its complement.
    """

    def __init__(self, masks, gain: float = 1.0, channels: int = 3):
        masks = np.asarray(masks, dtype=bool)
        if masks.ndim != 3:
            raise ValueError(f"masks must be (V,H,W), got shape {masks.shape}")
        if not masks.any() or masks.all():
            raise ValueError("masks must leave both regions non-empty")
        super().__init__(2, tuple(masks.shape) + (int(channels),))
        self.masks = masks
        self.gain = float(gain)
        # region means as flat dot products (cheap under heavy querying)
        flat = np.repeat(masks[..., None], int(channels), axis=3).ravel()
        self._w_moving = gain * flat / flat.sum()
        self._w_static = gain * (~flat) / (~flat).sum()

    def _logits(self, video: np.ndarray) -> np.ndarray:
        flat = video.ravel()
        return np.array(
            [self._w_moving @ flat, self._w_static @ flat], dtype=np.float64
        )


class RemoteOracle(Oracle):
    """Client for the HTTP model-serving protocol.

    Shapes and the class count are negotiated once from ``GET /v1/info``.
    Transport failures are retried with exponential backoff (``retries``
    times) and then surface as OracleTransportError. The query counter
    moves as soon as a request goes out, succeed or fail.
    """

    def __init__(self, base_url: str, timeout: float = 10.0, retries: int = 3,
                 backoff: float = 0.25, session=None):
        import requests

        self.base_url = base_url.rstrip("/")
        self.timeout = float(timeout)
        self.retries = int(retries)
        self.backoff = float(backoff)
        self._session = session or requests.Session()
        self._requests = requests
        info = self._get_info()
        num_classes = info.get("num_classes")
        if not isinstance(num_classes, int) or num_classes < 1:
            raise OracleProtocolError(f"server reported num_classes={num_classes!r}")
        super().__init__(num_classes, info.get("expected_shape") or None)
        self.model_id = info.get("model_id", "")

    def _get_info(self) -> dict:
        resp = self._request("GET", self.base_url + "/v1/info")
        return self._parse_json(resp)

    def _request(self, method: str, url: str, json_body=None):
        last = None
        for attempt in range(self.retries + 1):
            try:
                return self._session.request(
                    method, url, json=json_body, timeout=self.timeout
                )
            except (self._requests.ConnectionError, self._requests.Timeout) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (2 ** attempt))
        raise OracleTransportError(
            f"{method} {url} failed after {self.retries + 1} attempts: {last}"
        )

    @staticmethod
    def _parse_json(resp) -> dict:
        try:
            body = resp.json()
        except ValueError as exc:
            raise OracleProtocolError(f"non-JSON response: {exc}") from exc
        if resp.status_code != 200:
            raise OracleProtocolError(
                f"HTTP {resp.status_code}: {body.get('error', body)}"
            )
        return body

    def _logits(self, video: np.ndarray) -> np.ndarray:
        payload = np.ascontiguousarray(video, dtype="<f4").tobytes(order="C")
        body = {
            "shape": [int(s) for s in video.shape],
            "dtype": "f32le",
            "data": base64.b64encode(payload).decode("ascii"),
        }
        resp = self._request("POST", self.base_url + "/v1/logits", json_body=body)
        parsed = self._parse_json(resp)
        logits = np.asarray(parsed.get("logits", []), dtype=np.float64)
        if logits.size != self.num_classes:
            raise OracleProtocolError(
                f"server returned {logits.size} logits, expected {self.num_classes}"
            )
        return logits


def finite_difference_logits(oracle: Oracle, video, coord, h: float = 1e-2) -> np.ndarray:
    """Central finite differences of all logits along one pixel coordinate.

    Independent probe used to audit analytic gradients; costs two queries.
    """
    video = np.asarray(video, dtype=np.float64)
    up = video.copy()
    dn = video.copy()
    up[coord] += h
    dn[coord] -= h
    return (oracle.query(up) - oracle.query(dn)) / (2.0 * h)
