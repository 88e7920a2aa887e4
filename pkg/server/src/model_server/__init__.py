"""Reference oracle server: video classifiers behind the /v1/logits protocol."""

from .models import (
    EchoModel,
    SeededLinearModel,
    ServedModel,
    TorchvisionVideoModel,
    build_model,
)
from .service import RequestError, decode_payload, make_server, serve

__version__ = "0.1.0"
