"""Launches the orchestrator service with mock backends for UI tests.

Prints one JSON line with the chosen port, then serves until killed.
"""

import json
import socket
import tempfile

import uvicorn

from skilldesk.backends import MockBackend
from skilldesk.orchestrator import Orchestrator
from skilldesk.service import create_app


def main():
    backend = MockBackend()
    root = tempfile.mkdtemp(prefix="operator-ui-")
    orch = Orchestrator(text_backend=backend, vision_backend=backend,
                        data_root=root)
    app = create_app(orch)

    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    print(json.dumps({"port": port}), flush=True)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")


if __name__ == "__main__":
    main()
