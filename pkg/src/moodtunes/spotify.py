"""Streaming-service client: client-credentials auth and playlist lookup.

All request formation is byte-deterministic (fixed header set and order,
fixed user agent) so recorded wire transcripts can be compared exactly.
Secrets and tokens never appear in full in logs or reprs.
"""

import base64
import http.client
import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from urllib.parse import urlsplit

log = logging.getLogger(__name__)

USER_AGENT = "moodtunes-client/1.0"
TOKEN_PATH = "/api/token"
OPEN_BASE = "https://open.spotify.com"
DEFAULT_API_BASE = "https://api.spotify.com"
DEFAULT_AUTH_BASE = "https://accounts.spotify.com"

# token considered stale this many seconds before actual expiry
REFRESH_MARGIN = 30.0
# transport retry budget: one sleep per extra attempt
RETRY_BACKOFF = (0.5, 1.0, 2.0)
PAGE_SIZE = 100

ENTITY_KINDS = ("track", "artist", "album", "playlist")


class SpotifyError(Exception):
    """Base for client failures."""


class CredentialError(SpotifyError):
    """Token endpoint rejected the client credentials."""


class UpstreamAuthError(SpotifyError):
    """Resource endpoint rejected the bearer token even after a refresh."""


class PlaylistNotFoundError(SpotifyError):
    def __init__(self, playlist_id):
        super().__init__(f"playlist not found: {playlist_id}")
        self.playlist_id = playlist_id


class RateLimitError(SpotifyError):
    """Still rate limited after honoring one Retry-After."""


class TransportError(SpotifyError):
    """Network failure that survived the retry budget."""


class ProtocolError(SpotifyError):
    """Upstream response body did not match the expected schema."""


def _redact(value):
    return (value[:2] + "***") if value else "***"


@dataclass(frozen=True)
class Credentials:
    client_id: str
    client_secret: str

    def __post_init__(self):
        if not self.client_id or not self.client_secret:
            raise ValueError("client_id and client_secret must be nonempty")

    def __repr__(self):
        return (
            f"Credentials(client_id={self.client_id!r}, "
            f"client_secret='{_redact(self.client_secret)}')"
        )

    def basic_authorization(self):
        raw = f"{self.client_id}:{self.client_secret}".encode()
        return "Basic " + base64.b64encode(raw).decode()


@dataclass(frozen=True)
class Token:
    access_token: str
    expires_at: float  # monotonic clock timestamp

    def __repr__(self):
        return (
            f"Token(access_token='{_redact(self.access_token)}', "
            f"expires_at={self.expires_at!r})"
        )

    def fresh(self, clock=time.monotonic):
        return clock() < self.expires_at - REFRESH_MARGIN


@dataclass(frozen=True)
class Track:
    track_id: str
    title: str
    artist_id: str
    artist_name: str
    album_id: str
    album_name: str

    @property
    def track_link(self):
        return entity_link("track", self.track_id)

    @property
    def artist_link(self):
        return entity_link("artist", self.artist_id)

    @property
    def album_link(self):
        return entity_link("album", self.album_id)

    def as_dict(self):
        return {
            "track_id": self.track_id,
            "title": self.title,
            "artist_id": self.artist_id,
            "artist_name": self.artist_name,
            "album_id": self.album_id,
            "album_name": self.album_name,
            "track_link": self.track_link,
            "artist_link": self.artist_link,
            "album_link": self.album_link,
        }


@dataclass(frozen=True)
class Playlist:
    playlist_id: str
    name: str
    tracks: tuple

    def as_dict(self):
        return {
            "playlist_id": self.playlist_id,
            "name": self.name,
            "playlist_link": entity_link("playlist", self.playlist_id),
            "tracks": [t.as_dict() for t in self.tracks],
        }


def entity_link(kind, entity_id):
    """Deterministic public web URL for a catalog entity."""
    if kind not in ENTITY_KINDS:
        raise ValueError(f"unknown entity kind: {kind!r}")
    if not entity_id:
        raise ValueError(f"empty id for {kind} link")
    return f"{OPEN_BASE}/{kind}/{entity_id}"


# ---------------------------------------------------------------- transport


def _http_request(base, method, path, headers, body=None, timeout=10.0):
    """One HTTP exchange; returns (status, lowercase header dict, body bytes).

    Headers go on the wire exactly in the given order, nothing added
    beyond Host and Content-Length, which keeps transcripts reproducible.
    """
    parts = urlsplit(base)
    if parts.scheme == "https":
        conn = http.client.HTTPSConnection(parts.netloc, timeout=timeout)
    else:
        conn = http.client.HTTPConnection(parts.netloc, timeout=timeout)
    try:
        conn.putrequest(method, parts.path.rstrip("/") + path, skip_accept_encoding=True)
        for name, value in headers:
            conn.putheader(name, value)
        if body is not None:
            conn.putheader("Content-Length", str(len(body)))
        conn.endheaders(body)
        response = conn.getresponse()
        data = response.read()
        header_map = {name.lower(): value for name, value in response.getheaders()}
        return response.status, header_map, data
    finally:
        conn.close()


def _request_with_retries(base, method, path, headers, body=None, sleeper=time.sleep):
    """Retry transport failures with 0.5/1/2 s backoff; HTTP statuses pass through."""
    last = None
    for delay in (None,) + RETRY_BACKOFF:
        if delay is not None:
            sleeper(delay)
        try:
            return _http_request(base, method, path, headers, body)
        except OSError as exc:
            last = exc
            log.debug("transport failure on %s %s: %s", method, path, exc)
    raise TransportError(
        f"{method} {path} failed after {1 + len(RETRY_BACKOFF)} attempts: {last}"
    )


def _parse_json(data, context):
    try:
        return json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"{context}: body is not valid JSON: {exc}") from None


def _field(mapping, key, context):
    if not isinstance(mapping, dict) or key not in mapping:
        raise ProtocolError(f"{context}: missing field {key!r}")
    return mapping[key]


# ---------------------------------------------------------------- operations


def fetch_token(credentials, auth_base, clock=time.monotonic, sleeper=time.sleep):
    """Exchange client credentials for a bearer token (no caching here)."""
    body = b"grant_type=client_credentials"
    headers = [
        ("Authorization", credentials.basic_authorization()),
        ("Content-Type", "application/x-www-form-urlencoded"),
        ("User-Agent", USER_AGENT),
    ]
    log.debug("requesting token for client %s", credentials.client_id)
    status, _, data = _request_with_retries(
        auth_base, "POST", TOKEN_PATH, headers, body, sleeper=sleeper
    )
    if status == 401:
        raise CredentialError("token endpoint rejected the client credentials")
    if status != 200:
        raise ProtocolError(f"token endpoint returned status {status}")
    payload = _parse_json(data, "token response")
    access_token = _field(payload, "access_token", "token response")
    expires_in = _field(payload, "expires_in", "token response")
    if not isinstance(expires_in, (int, float)):
        raise ProtocolError("token response: expires_in is not a number")
    token = Token(access_token=str(access_token), expires_at=clock() + float(expires_in))
    log.debug("obtained token %s", token)
    return token


def _parse_track(item, context):
    track = _field(item, "track", context)
    artists = _field(track, "artists", context)
    if not artists:
        raise ProtocolError(f"{context}: track has no artists")
    album = _field(track, "album", context)
    return Track(
        track_id=str(_field(track, "id", context)),
        title=str(_field(track, "name", context)),
        artist_id=str(_field(artists[0], "id", context)),
        artist_name=str(_field(artists[0], "name", context)),
        album_id=str(_field(album, "id", context)),
        album_name=str(_field(album, "name", context)),
    )


def _next_path(next_url):
    parts = urlsplit(next_url)
    return parts.path + (f"?{parts.query}" if parts.query else "")


def get_playlist(token, playlist_id, api_base, refresh=None, sleeper=time.sleep):
    """Resolve a playlist and every page of its tracks.

    On 401 the optional refresh callable supplies one new token for a
    single retry of the failing request; 429 honors Retry-After once.
    """
    if not playlist_id:
        raise ValueError("empty playlist id")

    state = {"token": token, "refreshed": False, "rate_limited": False}

    def fetch(path):
        while True:
            headers = [
                ("Authorization", f"Bearer {state['token'].access_token}"),
                ("Accept", "application/json"),
                ("User-Agent", USER_AGENT),
            ]
            status, resp_headers, data = _request_with_retries(
                api_base, "GET", path, headers, sleeper=sleeper
            )
            if status == 401:
                if refresh is None or state["refreshed"]:
                    raise UpstreamAuthError(
                        f"playlist request unauthorized: {playlist_id}"
                    )
                log.debug("bearer token rejected; refreshing once")
                state["token"] = refresh()
                state["refreshed"] = True
                continue
            if status == 404:
                raise PlaylistNotFoundError(playlist_id)
            if status == 429:
                if state["rate_limited"]:
                    raise RateLimitError(f"still rate limited fetching {playlist_id}")
                delay = float(resp_headers.get("retry-after", "1"))
                log.debug("rate limited; honoring Retry-After %.1f s", delay)
                sleeper(delay)
                state["rate_limited"] = True
                continue
            if status != 200:
                raise ProtocolError(f"playlist endpoint returned status {status}")
            return _parse_json(data, f"playlist {playlist_id}")

    payload = fetch(f"/v1/playlists/{playlist_id}?limit={PAGE_SIZE}")
    name = str(_field(payload, "name", "playlist"))
    page = _field(payload, "tracks", "playlist")

    tracks = []
    while True:
        for item in _field(page, "items", "playlist tracks"):
            tracks.append(_parse_track(item, f"playlist {playlist_id}"))
        next_url = page.get("next")
        if not next_url:
            break
        page = fetch(_next_path(next_url))

    return Playlist(playlist_id=playlist_id, name=name, tracks=tuple(tracks))


# ---------------------------------------------------------------- client


@dataclass(frozen=True)
class SpotifyConfig:
    credentials: Credentials
    api_base: str = DEFAULT_API_BASE
    auth_base: str = DEFAULT_AUTH_BASE

    @classmethod
    def from_env(cls, env=None):
        source = env if env is not None else os.environ
        credentials = Credentials(
            client_id=source.get("SPOTIFY_CLIENT_ID", ""),
            client_secret=source.get("SPOTIFY_CLIENT_SECRET", ""),
        )
        return cls(
            credentials=credentials,
            api_base=source.get("SPOTIFY_API_BASE", DEFAULT_API_BASE),
            auth_base=source.get("SPOTIFY_AUTH_BASE", DEFAULT_AUTH_BASE),
        )


class SpotifyClient:
    """Shareable across request handlers; token refresh is single-writer.

    The lock is held across the network fetch so concurrent callers
    needing a token trigger exactly one upstream request.
    """

    def __init__(self, config, clock=time.monotonic, sleeper=time.sleep):
        self._config = config
        self._clock = clock
        self._sleeper = sleeper
        self._lock = threading.Lock()
        self._token = None

    def get_token(self):
        with self._lock:
            if self._token is None or not self._token.fresh(self._clock):
                self._token = fetch_token(
                    self._config.credentials,
                    self._config.auth_base,
                    clock=self._clock,
                    sleeper=self._sleeper,
                )
            return self._token

    def _force_refresh(self):
        with self._lock:
            self._token = fetch_token(
                self._config.credentials,
                self._config.auth_base,
                clock=self._clock,
                sleeper=self._sleeper,
            )
            return self._token

    def get_playlist(self, playlist_id):
        return get_playlist(
            self.get_token(),
            playlist_id,
            self._config.api_base,
            refresh=self._force_refresh,
            sleeper=self._sleeper,
        )
