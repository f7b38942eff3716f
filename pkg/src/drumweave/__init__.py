"""drumweave: drum pattern generation and genre transitions.

Learns a latent space of electronic-dance-music drum patterns with a
variational autoencoder and a GAN, interpolates in that space to build
genre-to-genre transitions, and sweeps the GAN noise space for autonomous
drumming. Ships a Standard MIDI File reader/writer, a synthetic corpus
generator, an HTTP API, and a CLI.
"""

from drumweave.patterns import (
    DrumPattern,
    InstrumentMap,
    PatternSequence,
    GM_PERCUSSION_MAP,
    binarize,
    crossfade,
    flatten,
    pattern_distance,
    unflatten,
)
from drumweave.interp import InterpolationRequest, interpolate
from drumweave.vae import VaeModel, VaeTrainConfig
from drumweave.gan import GanModel, SwirlConfig, swirl_sequence

__version__ = "0.1.0"

__all__ = [
    "DrumPattern",
    "InstrumentMap",
    "PatternSequence",
    "GM_PERCUSSION_MAP",
    "binarize",
    "crossfade",
    "flatten",
    "pattern_distance",
    "unflatten",
    "InterpolationRequest",
    "interpolate",
    "VaeModel",
    "VaeTrainConfig",
    "GanModel",
    "SwirlConfig",
    "swirl_sequence",
    "__version__",
]
