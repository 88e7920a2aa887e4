import threading

import pytest

from model_server.service import make_server


@pytest.fixture
def live_server():
    """Start a server for a given model/config on an ephemeral port and
    return its base URL; shuts down after the test."""
    started = []

    def _start(**kwargs):
        server = make_server(**kwargs)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        started.append((server, thread))
        host, port = server.server_address[:2]
        return f"http://{host}:{port}"

    yield _start
    for server, thread in started:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
