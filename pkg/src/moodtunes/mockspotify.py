"""In-process mock of the streaming service for offline mode and tests.

Serves the token and playlist endpoints on a loopback port, records every
request twice: a (method, path) call log and the raw request bytes with
the host port and any date header normalized, so wire formation can be
compared byte-for-byte against golden transcripts.
"""

import base64
import json
import re
import socketserver
import threading
from email.utils import formatdate
from urllib.parse import parse_qs, urlsplit

DEFAULT_CLIENT_ID = "mock-id"
DEFAULT_CLIENT_SECRET = "mock-secret"
DEFAULT_PAGE_SIZE = 100

_HOST_RE = re.compile(rb"(?im)^(Host: 127\.0\.0\.1):\d+\r$")
_DATE_RE = re.compile(rb"(?im)^(Date:) [^\r]*\r$")


def _normalize(raw):
    raw = _HOST_RE.sub(rb"\1:PORT\r", raw)
    return _DATE_RE.sub(rb"\1 DATE\r", raw)


def make_track(track_id, title, artist_id, artist_name, album_id, album_name):
    """Track JSON in the shape the real API returns inside playlist items."""
    return {
        "track": {
            "id": track_id,
            "name": title,
            "artists": [{"id": artist_id, "name": artist_name}],
            "album": {"id": album_id, "name": album_name},
        }
    }


def synthesize_playlist(playlist_id, n_tracks=3):
    """Deterministic fixture playlist derived only from its id."""
    tracks = [
        make_track(
            track_id=f"{playlist_id}-track-{i}",
            title=f"Track {i} of {playlist_id}",
            artist_id=f"{playlist_id}-artist-{i}",
            artist_name=f"Artist {i}",
            album_id=f"{playlist_id}-album-{i}",
            album_name=f"Album {i}",
        )
        for i in range(1, n_tracks + 1)
    ]
    return {"name": f"Playlist {playlist_id}", "items": tracks}


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        server = self.server.mock
        raw = self._read_request()
        if raw is None:
            return
        head, _, body = raw.partition(b"\r\n\r\n")
        request_line = head.split(b"\r\n", 1)[0].decode("latin-1")
        method, target, _ = request_line.split(" ", 2)
        headers = {}
        for line in head.split(b"\r\n")[1:]:
            name, _, value = line.decode("latin-1").partition(":")
            headers[name.strip().lower()] = value.strip()

        with server.lock:
            server.transcripts.append(_normalize(raw))
            server.calls.append((method, target))
        status, payload, extra = server.route(method, target, headers, body)
        self._respond(status, payload, extra)

    def _read_request(self):
        head = b""
        while b"\r\n\r\n" not in head:
            chunk = self.rfile.readline()
            if not chunk:
                return None
            head += chunk
        name_match = re.search(rb"(?im)^Content-Length: (\d+)\r$", head)
        body = b""
        if name_match:
            body = self.rfile.read(int(name_match.group(1)))
        return head + body

    def _respond(self, status, payload, extra_headers):
        reason = {200: "OK", 401: "Unauthorized", 404: "Not Found",
                  429: "Too Many Requests"}.get(status, "Error")
        body = json.dumps(payload).encode()
        lines = [
            f"HTTP/1.1 {status} {reason}",
            f"Date: {formatdate(usegmt=True)}",
            "Content-Type: application/json",
            f"Content-Length: {len(body)}",
            "Connection: close",
        ]
        for name, value in extra_headers:
            lines.append(f"{name}: {value}")
        self.wfile.write("\r\n".join(lines).encode() + b"\r\n\r\n" + body)

    def log_message(self, *args):  # pragma: no cover
        pass


class MockSpotify:
    """Configurable scenario server; start() binds an ephemeral port."""

    def __init__(
        self,
        client_id=DEFAULT_CLIENT_ID,
        client_secret=DEFAULT_CLIENT_SECRET,
        page_size=DEFAULT_PAGE_SIZE,
        synthesize_missing=False,
    ):
        self.client_id = client_id
        self.client_secret = client_secret
        self.page_size = page_size
        self.synthesize_missing = synthesize_missing
        self.playlists = {}
        self.calls = []
        self.transcripts = []
        self.tokens_issued = 0
        self.valid_tokens = set()
        self.rate_limit_budget = 0
        self.retry_after = 1
        self.lock = threading.Lock()
        self._server = None
        self._thread = None

    # -------------------------------------------------- scenario control

    def add_playlist(self, playlist_id, name, items):
        self.playlists[playlist_id] = {"name": name, "items": list(items)}

    def add_synthetic_playlist(self, playlist_id, n_tracks=3):
        self.playlists[playlist_id] = synthesize_playlist(playlist_id, n_tracks)

    def expire_tokens(self):
        """Reject previously issued bearers until a new token is fetched."""
        with self.lock:
            self.valid_tokens.clear()

    def rate_limit_next(self, n=1, retry_after=1):
        with self.lock:
            self.rate_limit_budget = n
            self.retry_after = retry_after

    @property
    def url(self):
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def env(self):
        """Environment mapping that points a client at this mock."""
        return {
            "SPOTIFY_CLIENT_ID": self.client_id,
            "SPOTIFY_CLIENT_SECRET": self.client_secret,
            "SPOTIFY_API_BASE": self.url,
            "SPOTIFY_AUTH_BASE": self.url,
        }

    # -------------------------------------------------- lifecycle

    def start(self):
        self._server = socketserver.ThreadingTCPServer(("127.0.0.1", 0), _Handler)
        self._server.daemon_threads = True
        self._server.mock = self
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._thread.join(timeout=5)
            self._server = None

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc_info):
        self.stop()

    # -------------------------------------------------- routing

    def route(self, method, target, headers, body):
        parts = urlsplit(target)
        if method == "POST" and parts.path == "/api/token":
            return self._token_route(headers)
        match = re.fullmatch(r"/v1/playlists/([^/?]+)", parts.path)
        if method == "GET" and match:
            return self._playlist_route(match.group(1), parts.query, headers, full=True)
        match = re.fullmatch(r"/v1/playlists/([^/?]+)/tracks", parts.path)
        if method == "GET" and match:
            return self._playlist_route(match.group(1), parts.query, headers, full=False)
        return 404, {"error": {"status": 404, "message": "no such route"}}, []

    def _token_route(self, headers):
        expected = base64.b64encode(
            f"{self.client_id}:{self.client_secret}".encode()
        ).decode()
        if headers.get("authorization") != f"Basic {expected}":
            return 401, {"error": "invalid_client"}, []
        with self.lock:
            self.tokens_issued += 1
            token = f"token-{self.tokens_issued}"
            self.valid_tokens.add(token)
        return 200, {"access_token": token, "token_type": "Bearer", "expires_in": 3600}, []

    def _playlist_route(self, playlist_id, query, headers, full):
        bearer = headers.get("authorization", "")
        with self.lock:
            authorized = bearer.removeprefix("Bearer ") in self.valid_tokens
            if authorized and self.rate_limit_budget > 0:
                self.rate_limit_budget -= 1
                return (
                    429,
                    {"error": {"status": 429, "message": "rate limited"}},
                    [("Retry-After", str(self.retry_after))],
                )
        if not authorized:
            return 401, {"error": {"status": 401, "message": "invalid token"}}, []

        playlist = self.playlists.get(playlist_id)
        if playlist is None:
            if not self.synthesize_missing:
                return 404, {"error": {"status": 404, "message": "not found"}}, []
            playlist = synthesize_playlist(playlist_id)

        params = parse_qs(query)
        offset = int(params.get("offset", ["0"])[0])
        limit = min(int(params.get("limit", [str(self.page_size)])[0]), self.page_size)
        items = playlist["items"][offset : offset + limit]
        end = offset + len(items)
        if end < len(playlist["items"]):
            nxt = f"{self.url}/v1/playlists/{playlist_id}/tracks?offset={end}&limit={limit}"
        else:
            nxt = None
        page = {"items": items, "next": nxt, "total": len(playlist["items"])}
        if full:
            return 200, {"id": playlist_id, "name": playlist["name"], "tracks": page}, []
        return 200, page, []
