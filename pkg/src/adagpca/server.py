"""Read-only HTTP server exposing a precomputed ordination grid.

Endpoints (all JSON, UTF-8):
  GET /api/meta              grid-wide metadata for the explorer controls
  GET /api/ordination/<i>    one grid entry
  GET /api/profile           profile log-likelihood trace (may be null)
  GET /                      static explorer assets

The loaded document is immutable, every request is stateless, and no
mutating method is accepted, so concurrent reads are trivially safe.
"""

from __future__ import annotations

import json
import os
import posixpath
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .dataio import DataError, read_ordination

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "application/javascript; charset=utf-8",
    ".mjs": "application/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json; charset=utf-8",
}

_FALLBACK_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>ordination grid</title></head>
<body><h1>Ordination grid server</h1>
<p>No explorer bundle is installed. The JSON API is live:</p>
<ul><li><a href="/api/meta">/api/meta</a></li>
<li><a href="/api/ordination/0">/api/ordination/0</a></li>
<li><a href="/api/profile">/api/profile</a></li></ul>
</body></html>
"""


def build_meta(doc: dict) -> dict:
    grid = doc["grid"]
    first = grid[0]
    k = len(first["samples"][0]["coords"]) if first["samples"] else 0
    metadata_columns = sorted(
        {key for sample in doc["samples"] for key in (sample.get("metadata") or {})}
    )
    return {
        "r_values": [entry["r"] for entry in grid],
        "k": k,
        "n": len(doc["samples"]),
        "p": len(doc["variables"]),
        "metadata_columns": metadata_columns,
        "variance_fractions": [entry["variance_fractions"] for entry in grid],
        "r_hat": doc.get("r"),
        "sigma2": doc.get("sigma2"),
        "method": doc.get("method"),
    }


class OrdinationServer:
    def __init__(self, doc: dict, static_dir=None):
        if not isinstance(doc.get("grid"), list) or not doc["grid"]:
            raise DataError("input document has no grid; run the grid command first")
        self.doc = doc
        self.meta = build_meta(doc)
        if static_dir is None:
            static_dir = os.path.join(os.path.dirname(__file__), "static")
        self.static_dir = os.path.abspath(static_dir)
        self._httpd = None

    @classmethod
    def from_file(cls, path, static_dir=None) -> "OrdinationServer":
        return cls(read_ordination(path), static_dir=static_dir)

    # -- request handling --------------------------------------------------

    def _api_response(self, path: str):
        """Return (status, payload) for an API path, or None if not API."""
        if not path.startswith("/api/"):
            return None
        if path == "/api/meta":
            return 200, self.meta
        if path == "/api/profile":
            return 200, {"profile_trace": self.doc.get("profile_trace"), "r_hat": self.doc.get("r")}
        if path.startswith("/api/ordination/"):
            tail = path[len("/api/ordination/") :]
            try:
                index = int(tail)
            except ValueError:
                return 404, {"error": f"bad ordination index {tail!r}"}
            grid = self.doc["grid"]
            if not (0 <= index < len(grid)):
                return 404, {"error": f"ordination index {index} out of range (grid has {len(grid)})"}
            return 200, grid[index]
        return 404, {"error": f"unknown endpoint {path}"}

    def _static_response(self, path: str):
        rel = posixpath.normpath(path.lstrip("/")) or "index.html"
        if rel in (".", ""):
            rel = "index.html"
        candidate = os.path.abspath(os.path.join(self.static_dir, rel))
        if not candidate.startswith(self.static_dir + os.sep) and candidate != self.static_dir:
            return 404, "application/json; charset=utf-8", b'{"error": "not found"}'
        if os.path.isdir(candidate):
            candidate = os.path.join(candidate, "index.html")
        if os.path.isfile(candidate):
            ext = os.path.splitext(candidate)[1].lower()
            ctype = _CONTENT_TYPES.get(ext, "application/octet-stream")
            with open(candidate, "rb") as fh:
                return 200, ctype, fh.read()
        if path in ("/", "/index.html"):
            return 200, "text/html; charset=utf-8", _FALLBACK_PAGE
        return 404, "application/json; charset=utf-8", b'{"error": "not found"}'

    def make_handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):  # noqa: N802 - http.server API
                path = self.path.split("?", 1)[0]
                api = server._api_response(path)
                if api is not None:
                    status, payload = api
                    body = json.dumps(payload).encode("utf-8")
                    ctype = "application/json; charset=utf-8"
                else:
                    status, ctype, body = server._static_response(path)
                self.send_response(status)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.send_header("Cache-Control", "no-store")
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, fmt, *args):  # noqa: A003 - silence per-request noise
                pass

        return Handler

    def start(self, host: str = "127.0.0.1", port: int = 0):
        """Bind the listening socket; returns the bound (host, port)."""
        self._httpd = ThreadingHTTPServer((host, port), self.make_handler())
        return self._httpd.server_address

    def start_background(self, host: str = "127.0.0.1", port: int = 0):
        """Bind and serve from a daemon thread; returns the bound (host, port)."""
        import threading

        addr = self.start(host, port)
        thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        thread.start()
        return addr

    def serve_forever(self, host: str = "127.0.0.1", port: int = 8765):
        addr = self.start(host, port)
        try:
            self._httpd.serve_forever()
        except KeyboardInterrupt:  # pragma: no cover - interactive stop
            pass
        finally:
            self._httpd.server_close()
        return addr

    def shutdown(self):
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
