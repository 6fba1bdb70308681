"""Face localization: image decoding, Haar cascade evaluation, cropping."""

from .cascade import (
    Cascade,
    CascadeFormatError,
    FeatureRect,
    Stage,
    Stump,
    load_default_cascade,
    parse_cascade,
    parse_cascade_file,
)
from .detect import (
    FaceBox,
    NoFaceError,
    detect_faces,
    evaluate_window,
    iou,
    select_primary_face,
)
from .image import (
    BoxError,
    GrayImage,
    ImageFormatError,
    crop_resize,
    decode_image,
    decode_pgm,
    integral_image,
    to_grayscale,
)

__all__ = [
    "BoxError",
    "Cascade",
    "CascadeFormatError",
    "FaceBox",
    "FeatureRect",
    "GrayImage",
    "ImageFormatError",
    "NoFaceError",
    "Stage",
    "Stump",
    "crop_resize",
    "decode_image",
    "decode_pgm",
    "detect_faces",
    "evaluate_window",
    "integral_image",
    "iou",
    "load_default_cascade",
    "parse_cascade",
    "parse_cascade_file",
    "select_primary_face",
    "to_grayscale",
]
