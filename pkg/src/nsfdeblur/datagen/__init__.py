"""Synthetic data: sharp videos, blur labeling, event streams, dataset IO."""

from .blur import (GOPRO_LIKE, REDS_LIKE, BlurProfile, LabeledSequence,
                   blur_average, get_profile, make_labeled_sequence)
from .events import EventStream, synth_events
from .storage import (load_image, quantize_image, read_dataset, save_image,
                      write_dataset)
from .synth import SharpVideo, intensity_centroid, synth_video

__all__ = [
    "SharpVideo", "synth_video", "intensity_centroid",
    "BlurProfile", "GOPRO_LIKE", "REDS_LIKE", "get_profile",
    "LabeledSequence", "blur_average", "make_labeled_sequence",
    "EventStream", "synth_events",
    "write_dataset", "read_dataset", "quantize_image", "save_image",
    "load_image",
]
