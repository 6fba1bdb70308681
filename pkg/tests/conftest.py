from pathlib import Path

import pytest

from moodtunes import modelio, synth
from moodtunes.data import load_age_ethnicity, load_fer2013
from moodtunes.models import TrainConfig, build_model, make_spec, train

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def synth_data_dir(tmp_path_factory):
    """Small synthetic dataset files shared across test modules."""
    root = tmp_path_factory.mktemp("synth-data")
    synth.write_emotion_csv(root / "emotion.csv", n=64, seed=11)
    synth.write_age_csv(root / "faces.csv", n=48, seed=11)
    return root


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory, synth_data_dir):
    """Three quickly trained models: enough to exercise plumbing, not accuracy."""
    root = tmp_path_factory.mktemp("tiny-models")
    emotion = load_fer2013(synth_data_dir / "emotion.csv", split="train")
    joint = load_age_ethnicity(synth_data_dir / "faces.csv")
    config = TrainConfig(rng_seed=1, epochs=2, batch_size=16)
    jobs = (
        ("emotion", "CNN-Emotion", emotion),
        ("age", "CNN-Age", joint.age_dataset()),
        ("ethnicity", "CNN-Ethnicity", joint.ethnicity_dataset()),
    )
    for kind, spec_name, dataset in jobs:
        model = build_model(make_spec(spec_name), config.rng_seed)
        train(model, dataset, config)
        modelio.save_model(model, root / f"{kind}.mrsm")
    return root


@pytest.fixture(scope="session")
def portrait_png():
    """Full-scene portrait with one detectable face."""
    return (FIXTURES / "portrait.png").read_bytes()


@pytest.fixture(scope="session")
def small_face_png(tmp_path_factory):
    """48x48 rendered face; cheap to run detection on."""
    from PIL import Image

    path = tmp_path_factory.mktemp("img") / "face.png"
    Image.fromarray(synth.portrait()).save(path)
    return path.read_bytes()


@pytest.fixture(scope="session")
def blank_png(tmp_path_factory):
    """Uniform gray image: decodes fine, contains no face."""
    import numpy as np
    from PIL import Image

    path = tmp_path_factory.mktemp("img") / "blank.png"
    Image.fromarray(np.full((64, 64), 128, dtype=np.uint8)).save(path)
    return path.read_bytes()
