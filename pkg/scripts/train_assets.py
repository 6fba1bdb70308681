"""Produce the shipped desk-trained model files.

Renders the deterministic synthetic datasets, trains the three models
with the desk recipe (first 4000 samples, batch 64, lr 1e-3), and
writes emotion.mrsm / age.mrsm / ethnicity.mrsm under
src/moodtunes/assets/models/.  Training-curve figures and the dataset
CSVs go to a scratch directory.  Run from the repository root:

    python3 scripts/train_assets.py
"""

import argparse
import logging
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from moodtunes import modelio, report, synth
from moodtunes.data import load_age_ethnicity, load_fer2013, take
from moodtunes.models import TrainConfig, build_model, evaluate, make_spec, train

log = logging.getLogger("train_assets")

LIMIT = 4000
SEED = 42
EMOTION_ROWS = 5000
FACE_ROWS = 4400


def train_one(kind, spec_name, dataset, out_dir, scratch, epochs):
    config = TrainConfig(rng_seed=SEED, epochs=epochs, batch_size=64, learning_rate=1e-3)
    spec = make_spec(spec_name)
    model = build_model(spec, config.rng_seed)
    started = time.monotonic()

    def progress(entry):
        log.info("%s epoch %d: %s", kind, entry["epoch"], entry)
        return False

    history = train(model, dataset, config, stop_when=progress)
    minutes = (time.monotonic() - started) / 60
    log.info("%s trained in %.1f min; final %s", kind, minutes, history[-1])
    modelio.save_model(model, out_dir / f"{kind}.mrsm")
    report.save_history_figure(history, scratch / f"{kind}_training.png", title=spec.name)
    return model, history


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out-dir", default="src/moodtunes/assets/models", help="where the model files land"
    )
    parser.add_argument("--scratch", default="/tmp/train_assets", help="datasets and figures")
    args = parser.parse_args()
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(asctime)s %(message)s")

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scratch = Path(args.scratch)
    scratch.mkdir(parents=True, exist_ok=True)

    emotion_csv = scratch / "emotion.csv"
    faces_csv = scratch / "faces.csv"
    log.info("rendering %d emotion rows and %d face rows", EMOTION_ROWS, FACE_ROWS)
    synth.write_emotion_csv(emotion_csv, n=EMOTION_ROWS, seed=1301)
    synth.write_age_csv(faces_csv, n=FACE_ROWS, seed=1307)

    emotion_train = take(load_fer2013(emotion_csv, split="train"), LIMIT)
    emotion_test = load_fer2013(emotion_csv, split="test")
    joint = load_age_ethnicity(faces_csv)
    age_data = take(joint.age_dataset(), LIMIT)
    ethnicity_data = take(joint.ethnicity_dataset(), LIMIT)

    emotion_model, _ = train_one(
        "emotion", "CNN-Emotion", emotion_train, out_dir, scratch, epochs=15
    )
    test_metrics = evaluate(emotion_model, emotion_test)
    log.info("emotion test-split metrics: %s", test_metrics)

    train_one("age", "CNN-Age", age_data, out_dir, scratch, epochs=15)
    train_one("ethnicity", "CNN-Ethnicity", ethnicity_data, out_dir, scratch, epochs=15)

    from moodtunes.data import normalize
    from moodtunes.pipeline import PredictionEngine

    engine = PredictionEngine(out_dir)
    try:
        portrait = synth.portrait()
        x = normalize(portrait).astype("float32").reshape(1, 1, 48, 48)
        triple = engine.predict_array(x)
        log.info("age-22 portrait triple: %s", triple)
    finally:
        engine.close()


if __name__ == "__main__":
    main()
