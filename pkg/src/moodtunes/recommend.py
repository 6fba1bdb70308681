"""Playlist selection: (emotion, age, ethnicity) -> one playlist id.

The mapping is an 80-entry table (4 emotions x 4 age buckets x 5
ethnicities) loaded from JSON. Playlist ids are opaque text handed to
the streaming client; nothing here interprets them. The table is plain
user-editable configuration, so a deployment that wants to neutralize
any axis can simply repeat ids across it.
"""

import json
from enum import IntEnum

from .data import AGE_MAX, AGE_MIN, Emotion, Ethnicity


class AgeBucket(IntEnum):
    CHILD = 0   # 0-12
    YOUTH = 1   # 13-24
    ADULT = 2   # 25-44
    SENIOR = 3  # 45+


_BUCKET_UPPER = ((AgeBucket.CHILD, 12), (AgeBucket.YOUTH, 24), (AgeBucket.ADULT, 44))

EMOTION_TOKENS = {e.name.lower(): e for e in Emotion}
BUCKET_TOKENS = {b.name.lower(): b for b in AgeBucket}
ETHNICITY_TOKENS = {e.name.lower(): e for e in Ethnicity}

TABLE_SIZE = len(Emotion) * len(AgeBucket) * len(Ethnicity)


class PlaylistTableError(ValueError):
    """The playlist JSON violates the 80-entry total-table contract."""


def bucket_age(age):
    """Total, monotone mapping from years to the four age buckets."""
    if not AGE_MIN <= age <= AGE_MAX:
        raise ValueError(f"age {age} outside [{AGE_MIN}, {AGE_MAX}]")
    for bucket, upper in _BUCKET_UPPER:
        if age <= upper:
            return bucket
    return AgeBucket.SENIOR


def _key_name(emotion, bucket, ethnicity):
    return f"({emotion.name.lower()}, {bucket.name.lower()}, {ethnicity.name.lower()})"


def load_playlist_table(text):
    """Parse and validate playlist JSON into a {key triple: id} dict.

    Every one of the 80 keys must appear exactly once with a nonempty id.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise PlaylistTableError(f"playlist table is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or doc.get("version") != 1:
        raise PlaylistTableError('playlist table must be an object with "version": 1')
    entries = doc.get("entries")
    if not isinstance(entries, list):
        raise PlaylistTableError('playlist table must carry an "entries" array')

    table = {}
    for i, entry in enumerate(entries):
        try:
            emotion = EMOTION_TOKENS[entry["emotion"]]
            bucket = BUCKET_TOKENS[entry["age_bucket"]]
            ethnicity = ETHNICITY_TOKENS[entry["ethnicity"]]
        except (KeyError, TypeError):
            raise PlaylistTableError(
                f"entry {i}: unknown or missing enum token "
                f"(emotion={entry.get('emotion')!r}, age_bucket={entry.get('age_bucket')!r}, "
                f"ethnicity={entry.get('ethnicity')!r})"
            ) from None
        playlist_id = entry.get("playlist_id")
        if not isinstance(playlist_id, str) or not playlist_id:
            raise PlaylistTableError(f"entry {i}: playlist_id must be nonempty text")
        key = (emotion, bucket, ethnicity)
        if key in table:
            raise PlaylistTableError(f"duplicate key {_key_name(*key)}")
        table[key] = playlist_id

    missing = [
        (e, b, t)
        for e in Emotion
        for b in AgeBucket
        for t in Ethnicity
        if (e, b, t) not in table
    ]
    if missing:
        raise PlaylistTableError(
            f"{len(missing)} key(s) missing, first: {_key_name(*missing[0])}"
        )
    assert len(table) == TABLE_SIZE
    return table


def load_playlist_file(path):
    with open(path, encoding="utf-8") as f:
        return load_playlist_table(f.read())


def select_playlist(table, emotion, age, ethnicity):
    """Pure total lookup; bucket_age collapses age to its bucket."""
    emotion = Emotion(emotion)
    ethnicity = Ethnicity(ethnicity)
    return table[(emotion, bucket_age(age), ethnicity)]
