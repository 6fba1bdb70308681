import numpy as np
import pytest

from moodtunes.data import Emotion, Ethnicity
from moodtunes.faces import NoFaceError, decode_image
from moodtunes.pipeline import MODEL_FILES, PredictionEngine


@pytest.fixture(scope="module")
def engine(tiny_model_dir):
    eng = PredictionEngine(tiny_model_dir)
    yield eng
    eng.close()


def _check_triple(triple):
    assert set(triple) == {"emotion", "age", "ethnicity"}
    emotion = triple["emotion"]
    assert emotion["label"] in {e.name.lower() for e in Emotion}
    assert set(emotion["probabilities"]) == {e.name.lower() for e in Emotion}
    assert sum(emotion["probabilities"].values()) == pytest.approx(1.0, abs=1e-5)
    assert isinstance(triple["age"], int)
    assert 0 <= triple["age"] <= 116
    ethnicity = triple["ethnicity"]
    assert ethnicity["label"] in {e.name.lower() for e in Ethnicity}
    assert set(ethnicity["probabilities"]) == {e.name.lower() for e in Ethnicity}
    assert sum(ethnicity["probabilities"].values()) == pytest.approx(1.0, abs=1e-5)


def test_predict_bytes_returns_full_triple(engine, small_face_png):
    _check_triple(engine.predict_bytes(small_face_png))


def test_label_matches_probability_argmax(engine, small_face_png):
    triple = engine.predict_bytes(small_face_png)
    probs = triple["emotion"]["probabilities"]
    assert triple["emotion"]["label"] == max(probs, key=probs.get)


def test_blank_image_raises_no_face(engine, blank_png):
    with pytest.raises(NoFaceError):
        engine.predict_bytes(blank_png)


def test_parallel_equals_sequential(tiny_model_dir, small_face_png):
    serial = PredictionEngine(tiny_model_dir, parallel=False)
    parallel = PredictionEngine(tiny_model_dir, parallel=True)
    try:
        assert serial.predict_bytes(small_face_png) == parallel.predict_bytes(small_face_png)
    finally:
        serial.close()
        parallel.close()


def test_face_crop_shape_and_range(engine, small_face_png):
    x = engine.face_crop(decode_image(small_face_png))
    assert x.shape == (1, 1, 48, 48)
    assert x.dtype == np.float32
    assert 0.0 <= float(x.min()) and float(x.max()) <= 1.0


def test_missing_model_file_names_it(tmp_path):
    with pytest.raises(ValueError, match="emotion.mrsm"):
        PredictionEngine(tmp_path)


def test_corrupt_model_file_names_it(tmp_path, tiny_model_dir):
    for name in MODEL_FILES.values():
        (tmp_path / name).write_bytes((tiny_model_dir / name).read_bytes())
    (tmp_path / "age.mrsm").write_bytes(b"MRSM but not really")
    with pytest.raises(ValueError, match="age.mrsm"):
        PredictionEngine(tmp_path)


def test_concurrent_predictions_agree(engine, small_face_png):
    from concurrent.futures import ThreadPoolExecutor

    expected = engine.predict_bytes(small_face_png)
    with ThreadPoolExecutor(max_workers=4) as pool:
        results = list(pool.map(lambda _: engine.predict_bytes(small_face_png), range(8)))
    assert all(r == expected for r in results)
