"""Deterministic synthetic face images with recoverable labels.

Each face is a drawn portrait whose labels map to visual structure:

* emotion -> mouth and brow geometry (smile, frown, angry V, flat)
* age     -> head size plus forehead wrinkle count (both monotone)
* ethnicity -> one of five distinct base skin-gray levels

Position jitter and pixel noise keep the mapping non-trivial. The
writers emit the exact CSV wire formats the loaders consume, so every
training path is identical to a run on real data; only the pixels are
drawn rather than photographed.
"""

import csv

import numpy as np
from PIL import Image, ImageDraw

from .data import Emotion, Ethnicity

SIZE = 48

# five separated gray levels, one per ethnicity code 0..4
SKIN_LEVELS = (95, 120, 145, 170, 195)

# native emotion codes used on the wire (0 angry, 3 happy, 4 sad, 6 neutral)
NATIVE_CODE = {Emotion.ANGRY: 0, Emotion.HAPPY: 3, Emotion.SAD: 4, Emotion.NEUTRAL: 6}
FILTERED_NATIVE_CODES = (1, 2, 5)  # disgust, fear, surprise: dropped by loaders


def _sample_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def render_face(emotion, age, ethnicity, rng, size=SIZE):
    """One uint8 grayscale face. Deterministic given the rng state."""
    emotion = Emotion(emotion)
    ethnicity = Ethnicity(ethnicity)
    img = Image.new("L", (size, size), color=30)
    draw = ImageDraw.Draw(img)

    cx = size // 2 + int(rng.integers(-2, 3))
    cy = size // 2 + int(rng.integers(-2, 3))
    # head grows with age: radius 13 px (newborn) to 21 px (oldest)
    growth = age / 116.0
    rx = int(round(13 + 8 * growth)) + int(rng.integers(-1, 2))
    ry = int(round(14 + 7 * growth)) + int(rng.integers(-1, 2))
    skin = SKIN_LEVELS[int(ethnicity)] + int(rng.integers(-6, 7))
    draw.ellipse([cx - rx, cy - ry, cx + rx, cy + ry], fill=skin)

    eye_dx = max(4, rx // 2)
    eye_y = cy - ry // 3
    for ex in (cx - eye_dx, cx + eye_dx):
        draw.ellipse([ex - 2, eye_y - 1, ex + 2, eye_y + 2], fill=15)

    if emotion == Emotion.ANGRY:
        # V brows angled toward the nose plus a clenched mouth block
        draw.line([cx - eye_dx - 3, eye_y - 6, cx - eye_dx + 2, eye_y - 3], fill=10, width=2)
        draw.line([cx + eye_dx + 3, eye_y - 6, cx + eye_dx - 2, eye_y - 3], fill=10, width=2)
        draw.rectangle([cx - eye_dx + 1, cy + ry // 2 - 1, cx + eye_dx - 1, cy + ry // 2 + 2], fill=10)
    elif emotion == Emotion.HAPPY:
        mouth_y = cy + ry // 3
        draw.arc([cx - eye_dx, mouth_y - 3, cx + eye_dx, mouth_y + 6], 0, 180, fill=10, width=2)
    elif emotion == Emotion.SAD:
        mouth_y = cy + ry // 2
        draw.arc([cx - eye_dx, mouth_y, cx + eye_dx, mouth_y + 9], 180, 360, fill=10, width=2)
    else:  # neutral: thin flat mouth
        mouth_y = cy + ry // 2
        draw.line([cx - eye_dx + 1, mouth_y, cx + eye_dx - 1, mouth_y], fill=10, width=1)

    # forehead wrinkles accumulate with age: one line per ~9 years
    n_wrinkles = int(age) // 9
    top = cy - ry + 3
    for i in range(n_wrinkles):
        y = top + 2 * i
        if y >= eye_y - 4:
            break
        draw.line([cx - rx // 2, y, cx + rx // 2, y], fill=max(skin - 60, 20), width=1)

    arr = np.asarray(img, dtype=np.float64)
    arr = arr + rng.normal(0.0, 5.0, arr.shape)
    return np.clip(np.round(arr), 0, 255).astype(np.uint8)


def _pixel_string(arr):
    return " ".join(str(int(v)) for v in arr.reshape(-1))


def emotion_samples(n, seed, filtered_fraction=0.02):
    """Yield (native_code, image) rows; a few rows use filtered codes."""
    for i in range(n):
        rng = _sample_rng(seed, i)
        if rng.random() < filtered_fraction:
            code = int(rng.choice(FILTERED_NATIVE_CODES))
            emotion = Emotion.NEUTRAL  # drawn face is irrelevant; loader drops it
        else:
            emotion = Emotion(int(rng.integers(0, 4)))
            code = NATIVE_CODE[emotion]
        age = int(rng.integers(16, 60))
        ethnicity = int(rng.integers(0, 5))
        yield code, render_face(emotion, age, ethnicity, rng)


def write_emotion_csv(path, n, seed, with_usage=True, test_fraction=0.15):
    """Emotion CSV in wire format: emotion,pixels[,usage]."""
    split_rng = np.random.default_rng(np.random.SeedSequence([int(seed), 999]))
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["emotion", "pixels", "usage"] if with_usage else ["emotion", "pixels"])
        for code, image in emotion_samples(n, seed):
            row = [str(code), _pixel_string(image)]
            if with_usage:
                row.append("PublicTest" if split_rng.random() < test_fraction else "Training")
            writer.writerow(row)
    return path


def age_samples(n, seed):
    """Yield (age, ethnicity_code, image) rows."""
    for i in range(n):
        rng = _sample_rng(seed, i)
        age = int(rng.integers(0, 117))
        ethnicity = int(rng.integers(0, 5))
        emotion = Emotion(int(rng.integers(0, 4)))
        yield age, ethnicity, render_face(emotion, age, ethnicity, rng)


def write_age_csv(path, n, seed):
    """Age CSV in wire format: age,ethnicity,gender,img_name,pixels."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["age", "ethnicity", "gender", "img_name", "pixels"])
        for i, (age, ethnicity, image) in enumerate(age_samples(n, seed)):
            gender = i % 2  # present on the wire, dropped by the loader
            writer.writerow([age, ethnicity, gender, f"face_{i:05d}.png", _pixel_string(image)])
    return path


def portrait(emotion=Emotion.HAPPY, age=22, ethnicity=Ethnicity.ASIAN, seed=2024, size=SIZE):
    """A single deterministic face image (uint8), default: happy 22-year-old."""
    return render_face(emotion, age, ethnicity, _sample_rng(seed, 0), size=size)
