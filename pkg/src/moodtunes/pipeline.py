"""Image bytes to prediction triple: face localization plus the three models.

The engine owns the loaded models and a small thread pool; inference is
read-only on shared state, so concurrent calls are safe and the parallel
result is identical to running the models sequentially.
"""

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import modelio
from .data import AGE_MAX, AGE_MIN, Emotion, Ethnicity, normalize
from .faces import (
    crop_resize,
    decode_image,
    detect_faces,
    load_default_cascade,
    parse_cascade_file,
    select_primary_face,
)

MODEL_FILES = {
    "emotion": "emotion.mrsm",
    "age": "age.mrsm",
    "ethnicity": "ethnicity.mrsm",
}


def _probability_map(enum_cls, probs):
    return {member.name.lower(): float(probs[member.value]) for member in enum_cls}


class PredictionEngine:
    """Three loaded models plus the detector, shared across callers."""

    def __init__(self, model_dir, cascade_path=None, parallel=True):
        model_dir = Path(model_dir)
        self.models = {}
        for name, filename in MODEL_FILES.items():
            path = model_dir / filename
            try:
                self.models[name] = modelio.load_model(path)
            except (OSError, ValueError) as exc:
                raise ValueError(f"cannot load model file {path}: {exc}") from exc
        if cascade_path is None:
            self.cascade = load_default_cascade()
        else:
            self.cascade = parse_cascade_file(cascade_path)
        self._executor = ThreadPoolExecutor(max_workers=3) if parallel else None

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=False)

    def face_crop(self, gray):
        """Primary face of the image as model input, (1, 1, 48, 48) in [0, 1]."""
        boxes = detect_faces(self.cascade, gray)
        face = select_primary_face(boxes)
        crop = crop_resize(gray, face)
        x = normalize(crop.pixels).astype(np.float32)
        return x.reshape(1, 1, crop.height, crop.width)

    def _run_models(self, x):
        names = ("emotion", "age", "ethnicity")
        if self._executor is None:
            return [self.models[name].predict(x) for name in names]
        futures = [
            self._executor.submit(self.models[name].predict, x) for name in names
        ]
        return [f.result() for f in futures]

    def predict_array(self, x):
        """Triple for a prepared model input batch of one."""
        emotion_out, age_out, ethnicity_out = self._run_models(x)
        emotion_probs = emotion_out[0]
        ethnicity_probs = ethnicity_out[0]
        age = int(np.clip(round(float(age_out[0])), AGE_MIN, AGE_MAX))
        return {
            "emotion": {
                "label": Emotion(int(emotion_probs.argmax())).name.lower(),
                "probabilities": _probability_map(Emotion, emotion_probs),
            },
            "age": age,
            "ethnicity": {
                "label": Ethnicity(int(ethnicity_probs.argmax())).name.lower(),
                "probabilities": _probability_map(Ethnicity, ethnicity_probs),
            },
        }

    def predict_image(self, gray):
        return self.predict_array(self.face_crop(gray))

    def predict_bytes(self, data):
        """Raw PNG/JPEG/PGM bytes to triple; raises the face-pipeline errors."""
        return self.predict_image(decode_image(data))
