"""HTTP service speaking the oracle wire protocol.

GET  /v1/info    -> {"model_id", "num_classes", "expected_shape"}
POST /v1/logits  <- {"shape": [V,H,W,C], "dtype": "f32le", "data": "<base64>"}
                 -> {"logits": [...], "label": int, "model_id": str}

Malformed requests get 400 with {"error": ...}; model failures get 500.
Each request is handled statelessly.
"""

from __future__ import annotations

import base64
import binascii
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .models import ServedModel, build_model


class RequestError(ValueError):
    """Client-side protocol violation; maps to HTTP 400."""


def decode_payload(body: dict, expected_shape=None) -> np.ndarray:
    """Validate and decode a /v1/logits request body into a video array."""
    shape = body.get("shape")
    if (
        not isinstance(shape, list)
        or not shape
        or not all(isinstance(s, int) and s > 0 for s in shape)
    ):
        raise RequestError(f"bad shape {shape!r}")
    if expected_shape is not None and tuple(shape) != tuple(expected_shape):
        raise RequestError(
            f"shape {shape} does not match expected {list(expected_shape)}"
        )
    if body.get("dtype") != "f32le":
        raise RequestError(f"unsupported dtype {body.get('dtype')!r}")
    data = body.get("data")
    if not isinstance(data, str):
        raise RequestError("missing base64 data field")
    try:
        raw = base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise RequestError(f"bad base64 payload: {exc}") from exc
    count = int(np.prod(shape))
    if len(raw) != 4 * count:
        raise RequestError(
            f"payload is {len(raw)} bytes, expected {4 * count} for shape {shape}"
        )
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)


class OracleRequestHandler(BaseHTTPRequestHandler):
    model: ServedModel  # attached by make_server
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):
        pass

    def _reply(self, code: int, payload: dict) -> None:
        blob = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def do_GET(self):
        if self.path == "/v1/info":
            self._reply(200, self.model.info())
        else:
            self._reply(404, {"error": f"no such endpoint {self.path}"})

    def do_POST(self):
        if self.path != "/v1/logits":
            self._reply(404, {"error": f"no such endpoint {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            try:
                body = json.loads(self.rfile.read(length))
            except json.JSONDecodeError as exc:
                raise RequestError(f"invalid JSON body: {exc}") from exc
            video = decode_payload(body, self.model.expected_shape)
            logits = self.model.logits(video)
            self._reply(
                200,
                {
                    "logits": logits,
                    "label": int(np.argmax(logits)),
                    "model_id": self.model.model_id,
                },
            )
        except RequestError as exc:
            self._reply(400, {"error": str(exc)})
        except Exception as exc:  # model crash or server bug
            self._reply(500, {"error": f"{type(exc).__name__}: {exc}"})


def make_server(config: dict | None = None, *, model: ServedModel | None = None,
                host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    """Build (but do not start) a server; pass a config dict or a model."""
    if model is None:
        if config is None:
            raise ValueError("need a config or a model")
        model = build_model(config.get("model", {}))
        host = config.get("host", host)
        port = int(config.get("port", port))
    handler = type("BoundHandler", (OracleRequestHandler,), {"model": model})
    return ThreadingHTTPServer((host, port), handler)


def serve(config: dict) -> None:
    server = make_server(config)
    host, port = server.server_address[:2]
    print(f"serving {server.RequestHandlerClass.model.model_id} on {host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
