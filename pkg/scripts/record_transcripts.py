"""Record golden wire transcripts for the streaming client.

Runs the canonical token + paginated playlist scenario against the mock
server and stores each normalized raw request. The test suite replays
the same scenario and compares byte-for-byte; regenerate only when the
wire format changes on purpose.
"""

from pathlib import Path

from moodtunes import spotify
from moodtunes.mockspotify import MockSpotify, make_track

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "transcripts"


def canonical_scenario():
    """Token fetch plus a 3-track playlist read paginated two-by-two."""
    with MockSpotify(page_size=2) as mock:
        mock.add_playlist(
            "golden-pl",
            "Golden Playlist",
            [
                make_track(f"t{i}", f"Song {i}", f"a{i}", f"Artist {i}",
                           f"al{i}", f"Album {i}")
                for i in range(1, 4)
            ],
        )
        client = spotify.SpotifyClient(spotify.SpotifyConfig.from_env(mock.env()))
        client.get_playlist("golden-pl")
        return list(mock.transcripts)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    transcripts = canonical_scenario()
    for index, raw in enumerate(transcripts, start=1):
        path = OUT / f"request_{index:02d}.bin"
        path.write_bytes(raw)
        print(f"wrote {path} ({len(raw)} bytes)")


if __name__ == "__main__":
    main()
