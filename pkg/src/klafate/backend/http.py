"""HTTP surface for the operator console.

Endpoints:

* ``GET /assessment``  server-sent events; emits ``status`` and ``assessment``
  events as they happen, starting with the retained current state
* ``POST /event``      operator event as JSON ``{kind, stars?, text?, ts}``
* ``GET /metrics``     latency and weight snapshot
* ``GET /health``      liveness probe

Responses are JSON; CORS is open so a separately served console can talk to
the backend during development.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from ..errors import ProtocolError
from .bus import TOPIC_ASSESSMENT, TOPIC_STATUS
from .serialize import dumps_canonical
from .service import Backend

logger = logging.getLogger(__name__)

SSE_HEARTBEAT_S = 15.0

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
}


class BackendHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, backend: Backend, static_dir: Optional[Path] = None):
        self.backend = backend
        self.static_dir = Path(static_dir) if static_dir else None
        super().__init__(address, _Handler)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def backend(self) -> Backend:
        return self.server.backend

    def log_message(self, fmt, *args):  # route through logging, not stderr
        logger.debug("http: " + fmt, *args)

    def _send_json(self, status: int, payload: dict):
        body = dumps_canonical(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        path = self.path.split("?", 1)[0]
        if path == "/health":
            self._send_json(200, {"status": "ok"})
        elif path == "/metrics":
            self._send_json(200, self.backend.metrics())
        elif path == "/assessment":
            self._serve_sse()
        elif self.server.static_dir is not None:
            self._serve_static(path)
        else:
            self._send_json(404, {"error": f"no such path {path!r}"})

    def do_POST(self):
        path = self.path.split("?", 1)[0]
        if path != "/event":
            self._send_json(404, {"error": f"no such path {path!r}"})
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            self._send_json(400, {"ok": False, "error": f"bad JSON: {err}"})
            return
        try:
            reply = self.backend.submit_event(payload)
        except ProtocolError as err:
            self._send_json(400, {"ok": False, "error": str(err)})
            return
        except queue.Empty:
            self._send_json(503, {"ok": False, "error": "backend loop is not running"})
            return
        self._send_json(200 if reply.get("ok") else 409, reply)

    # -- server-sent events -------------------------------------------------

    def _serve_sse(self):
        inbox: "queue.Queue[tuple[str, dict]]" = queue.Queue()

        def deliver(topic: str, payload: dict):
            inbox.put((topic, payload))

        subscription = self.backend.bus.subscribe(
            TOPIC_STATUS, deliver, replay_retained=True
        )
        subscription_a = self.backend.bus.subscribe(
            TOPIC_ASSESSMENT, deliver, replay_retained=True
        )
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            while True:
                try:
                    topic, payload = inbox.get(timeout=SSE_HEARTBEAT_S)
                except queue.Empty:
                    self.wfile.write(b": keep-alive\n\n")
                    self.wfile.flush()
                    continue
                name = "assessment" if topic == TOPIC_ASSESSMENT else "status"
                data = dumps_canonical(payload)
                self.wfile.write(f"event: {name}\ndata: {data}\n\n".encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            subscription.unsubscribe()
            subscription_a.unsubscribe()

    # -- static console -------------------------------------------------------

    def _serve_static(self, path: str):
        name = "index.html" if path in ("/", "") else path.lstrip("/")
        target = (self.server.static_dir / name).resolve()
        root = self.server.static_dir.resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            self._send_json(404, {"error": f"no such path {path!r}"})
            return
        body = target.read_bytes()
        self.send_response(200)
        self.send_header(
            "Content-Type", _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
        )
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def serve_http(
    backend: Backend, host: str = "127.0.0.1", port: int = 8080,
    static_dir: Optional[Path] = None,
) -> BackendHTTPServer:
    """Start the HTTP server on its own threads; caller keeps the handle."""
    server = BackendHTTPServer((host, port), backend, static_dir=static_dir)
    thread = threading.Thread(target=server.serve_forever, name="klafate-http", daemon=True)
    thread.start()
    return server
