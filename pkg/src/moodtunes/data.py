"""Dataset loading: the two face-image CSV formats, label filtering, and splits.

Two source layouts are understood:

* emotion data as a CSV of `emotion,pixels[,usage]` rows (pixel string =
  2304 space-separated integers) or as a `train|test/<class>/*.png` tree;
* age/ethnicity data as a CSV of `age,ethnicity,gender,img_name,pixels`.

Rows that fail validation are skipped with a counted warning; the
row-level parsers raise so callers can still validate strictly.
"""

import csv
import logging
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

IMAGE_SIZE = 48
AGE_MIN = 0
AGE_MAX = 116


class Emotion(IntEnum):
    ANGRY = 0
    HAPPY = 1
    NEUTRAL = 2
    SAD = 3


class Ethnicity(IntEnum):
    WHITE = 0
    BLACK = 1
    ASIAN = 2
    INDIAN = 3
    OTHERS = 4


# Native emotion codes in the canonical file layout. Public copies of the
# emotion CSV disagree on code order, so this table is configuration: pass
# a different map to load_emotion_csv when your copy differs.
DEFAULT_EMOTION_CODE_NAMES = {
    0: "angry",
    1: "disgust",
    2: "fear",
    3: "happy",
    4: "sad",
    5: "surprise",
    6: "neutral",
}

# retained class name -> our label
EMOTION_BY_NAME = {
    "angry": Emotion.ANGRY,
    "happy": Emotion.HAPPY,
    "neutral": Emotion.NEUTRAL,
    "sad": Emotion.SAD,
}


class DataFormatError(ValueError):
    """A row or pixel string violates the dataset contract."""


@dataclass(eq=False)
class Dataset:
    """Images plus one label family.

    x: float32 array (N, 1, 48, 48), values in [0, 1]
    y: int labels (emotion/ethnicity) or float years (age)
    kind: "emotion" | "age" | "ethnicity"
    """

    x: np.ndarray
    y: np.ndarray
    kind: str

    def __len__(self):
        return self.x.shape[0]


@dataclass(eq=False)
class AgeEthnicityData:
    """The joint age/ethnicity source, sliceable into per-model datasets."""

    x: np.ndarray
    ages: np.ndarray
    ethnicities: np.ndarray

    def __len__(self):
        return self.x.shape[0]

    def age_dataset(self):
        return Dataset(self.x, self.ages.astype(np.float64), "age")

    def ethnicity_dataset(self):
        return Dataset(self.x, self.ethnicities.astype(np.int64), "ethnicity")


def parse_pixel_string(s, width, height):
    """Whitespace-separated integers -> (height, width) array of [0, 255]."""
    tokens = s.split()
    if len(tokens) != width * height:
        raise DataFormatError(
            f"pixel string has {len(tokens)} tokens, expected {width * height}"
        )
    try:
        values = np.array(tokens).astype(np.int64)
    except ValueError as e:
        raise DataFormatError(f"pixel string has a non-integer token: {e}") from None
    if values.min() < 0 or values.max() > 255:
        raise DataFormatError("pixel values must lie in [0, 255]")
    return values.reshape(height, width)


def normalize(image):
    """[0, 255] pixel values -> [0, 1] floats."""
    arr = np.asarray(image)
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise DataFormatError("normalize: input values must lie in [0, 255]")
    return arr.astype(np.float64) / 255.0


def parse_emotion_row(row, code_names):
    """One CSV row -> (Emotion, image array), or None for a filtered class.

    Raises DataFormatError for codes outside the native table or bad pixels.
    """
    try:
        code = int(row["emotion"])
    except (ValueError, TypeError):
        raise DataFormatError(f"emotion code {row.get('emotion')!r} is not an integer") from None
    if code not in code_names:
        raise DataFormatError(f"unknown emotion code {code}")
    name = code_names[code]
    if name not in EMOTION_BY_NAME:
        return None  # disgust/fear/surprise are dropped by design
    image = parse_pixel_string(row["pixels"], IMAGE_SIZE, IMAGE_SIZE)
    return EMOTION_BY_NAME[name], image


def parse_age_row(row):
    """One CSV row -> (age, Ethnicity, image array); gender is discarded."""
    try:
        age = int(row["age"])
        eth_code = int(row["ethnicity"])
    except (ValueError, TypeError):
        raise DataFormatError("age and ethnicity must be integers") from None
    if not AGE_MIN <= age <= AGE_MAX:
        raise DataFormatError(f"age {age} outside [{AGE_MIN}, {AGE_MAX}]")
    try:
        ethnicity = Ethnicity(eth_code)
    except ValueError:
        raise DataFormatError(f"ethnicity code {eth_code} outside 0-4") from None
    image = parse_pixel_string(row["pixels"], IMAGE_SIZE, IMAGE_SIZE)
    return age, ethnicity, image


def _finish_images(images):
    if not images:
        return np.zeros((0, 1, IMAGE_SIZE, IMAGE_SIZE), dtype=np.float32)
    stack = np.stack(images).astype(np.float32)
    return stack.reshape(len(images), 1, IMAGE_SIZE, IMAGE_SIZE)


def _warn_skipped(skipped, source):
    if skipped:
        log.warning("skipped %d malformed row(s) while loading %s", skipped, source)


def load_emotion_csv(path, split="train", code_names=None):
    """Load the emotion CSV, keeping only the four retained classes.

    With a `usage` column, rows are assigned to train ("Training") or
    test (anything else); without one, every row belongs to either split.
    """
    code_names = DEFAULT_EMOTION_CODE_NAMES if code_names is None else code_names
    if split not in ("train", "test"):
        raise ValueError(f"split must be 'train' or 'test', got {split!r}")
    images, labels, skipped = [], [], 0
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            usage = row.get("usage") or row.get("Usage")
            if usage is not None:
                in_train = usage.strip().lower() == "training"
                if (split == "train") != in_train:
                    continue
            try:
                parsed = parse_emotion_row(row, code_names)
            except DataFormatError:
                skipped += 1
                continue
            if parsed is None:
                continue
            label, image = parsed
            images.append(normalize(image))
            labels.append(int(label))
    _warn_skipped(skipped, path)
    return Dataset(_finish_images(images), np.array(labels, dtype=np.int64), "emotion")


def load_emotion_tree(root, split="train"):
    """Load a `train|test/<class-name>/*.png` directory tree."""
    from PIL import Image

    root = Path(root) / split
    if not root.is_dir():
        raise DataFormatError(f"no {split!r} directory under {root.parent}")
    images, labels, skipped = [], [], 0
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        name = class_dir.name.lower()
        if name not in EMOTION_BY_NAME:
            continue  # filtered classes may still be present on disk
        for png in sorted(class_dir.glob("*.png")):
            with Image.open(png) as im:
                arr = np.asarray(im.convert("L"))
            if arr.shape != (IMAGE_SIZE, IMAGE_SIZE):
                skipped += 1
                continue
            images.append(normalize(arr))
            labels.append(int(EMOTION_BY_NAME[name]))
    _warn_skipped(skipped, root)
    return Dataset(_finish_images(images), np.array(labels, dtype=np.int64), "emotion")


def load_fer2013(path, split="train", code_names=None):
    """Dispatch on layout: CSV file or class-directory tree."""
    p = Path(path)
    if p.is_dir():
        return load_emotion_tree(p, split)
    return load_emotion_csv(p, split, code_names)


def load_age_ethnicity(path):
    """Load the age/ethnicity CSV; gender and img_name columns are dropped."""
    images, ages, eths, skipped = [], [], [], 0
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            try:
                age, ethnicity, image = parse_age_row(row)
            except DataFormatError:
                skipped += 1
                continue
            images.append(normalize(image))
            ages.append(age)
            eths.append(int(ethnicity))
    _warn_skipped(skipped, path)
    return AgeEthnicityData(
        _finish_images(images),
        np.array(ages, dtype=np.int64),
        np.array(eths, dtype=np.int64),
    )


def split(dataset, test_fraction, rng_seed):
    """Shuffled disjoint (train, test) cut; deterministic under rng_seed."""
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    if n < 2:
        raise DataFormatError("cannot split a dataset with fewer than 2 samples")
    order = np.random.default_rng(rng_seed).permutation(n)
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    test_idx, train_idx = order[:n_test], order[n_test:]
    make = lambda idx: Dataset(dataset.x[idx], dataset.y[idx], dataset.kind)
    return make(train_idx), make(test_idx)


def take(dataset, n):
    """First n samples (load order is deterministic, so this is too)."""
    if n is None or n >= len(dataset):
        return dataset
    return Dataset(dataset.x[:n], dataset.y[:n], dataset.kind)
