"""Audio steganalysis with re-embedding calibration and reversed-Mel energy features."""

__version__ = "0.1.0"

from .audio_io import AudioClip, downmix_mono, read_wav, segment, write_wav
from .embedders import EmbedderSpec, EmbedKind, embed
from .features import CalibrationSpec, FeatureConfig, extract_features, moments, reembed

__all__ = [
    "AudioClip", "CalibrationSpec", "EmbedKind", "EmbedderSpec", "FeatureConfig",
    "downmix_mono", "embed", "extract_features", "moments", "read_wav", "reembed",
    "segment", "write_wav",
]
