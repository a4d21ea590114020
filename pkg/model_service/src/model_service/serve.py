"""HTTP serving of trained classifiers.

Wire protocol (the annotation pipeline's classifier_service backend is the
client):

    POST /classify {"variable": "...", "text": "..."} -> {"label", "score"}
    GET  /health -> 200

Requests are stateless; model objects are read-only after load, so the
threading server needs no further synchronization.
"""

from __future__ import annotations

import json
import threading
from functools import partial
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Mapping

from .model import TrainedModel

VARIABLES = ("remote_type", "remuneration", "experience", "education")


class ClassifyHandler(BaseHTTPRequestHandler):
    def __init__(self, models: Mapping[str, TrainedModel], *args, **kwargs):
        self._models = models
        super().__init__(*args, **kwargs)

    def _reply(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"status": "ok", "variables": sorted(self._models)})
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/classify":
            self._reply(404, {"error": "not found"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            payload = json.loads(self.rfile.read(length)) if length else {}
        except (ValueError, json.JSONDecodeError):
            self._reply(400, {"error": "body must be a JSON object"})
            return
        variable = payload.get("variable")
        text = payload.get("text")
        if variable not in VARIABLES:
            self._reply(400, {"error": f"unknown variable: {variable!r}"})
            return
        if not isinstance(text, str) or not text.strip():
            self._reply(422, {"error": "text must be a non-empty string"})
            return
        model = self._models.get(variable)
        if model is None:
            self._reply(503, {"error": f"model for {variable} not loaded"})
            return
        label, score = model.predict([text])[0]
        self._reply(200, {"label": label, "score": score})

    def log_message(self, *args):
        pass


def serve(models: Mapping[str, TrainedModel], port: int) -> ThreadingHTTPServer:
    """Start the service on a background thread; caller owns shutdown()."""
    handler = partial(ClassifyHandler, dict(models))
    server = ThreadingHTTPServer(("127.0.0.1", port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
