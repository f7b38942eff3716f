"""Latent-space interpolation: LERP/SLERP walks and the 3-step pipeline.

Transitions are built by encoding the endpoint patterns to their
posterior means, walking a code sequence between them, and decoding each
code back to a pattern. Pattern-space crossfades are kept as the
baseline the latent methods are contrasted against; they bypass the
model entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from drumweave.patterns import (
    DrumPattern,
    PatternSequence,
    binarize,
    crossfade,
)
from drumweave.vae import VaeModel

LATENT_METHODS = ("lerp", "slerp")
CROSSFADE_METHODS = ("crossfade_linear", "crossfade_equal_power")
METHODS = LATENT_METHODS + CROSSFADE_METHODS

SLERP_DEGENERATE_ANGLE = 1e-6
SLERP_ANTIPARALLEL_MARGIN = 1e-3


class InterpError(ValueError):
    """Base class for interpolation failures."""


class ZeroNormError(InterpError):
    """SLERP endpoint with zero norm has no direction to rotate."""


class AntiparallelError(InterpError):
    """Nearly opposite endpoints make the great-circle arc ambiguous."""


class UnknownPatternError(InterpError):
    """Request referenced a corpus id that does not exist."""


class MissingModelError(InterpError):
    """Latent method requested without a trained model."""


@dataclass(frozen=True)
class InterpolationRequest:
    start: DrumPattern | str
    goal: DrumPattern | str
    length: int
    method: str = "slerp"
    velocity_floor: float = 0.1

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise InterpError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.length < 1:
            raise InterpError("interpolation length must be >= 1")
        if not 0.0 <= self.velocity_floor < 1.0:
            raise InterpError("velocity_floor must lie in [0, 1)")


@dataclass
class InterpolationResult:
    patterns: tuple[DrumPattern, ...]
    codes: list[np.ndarray] | None
    method: str

    def __post_init__(self) -> None:
        if (self.codes is not None) != (self.method in LATENT_METHODS):
            raise InterpError("codes must be present exactly for latent methods")
        if self.codes is not None and len(self.codes) != len(self.patterns):
            raise InterpError("one code per pattern")

    def to_json(self) -> dict:
        doc = {
            "method": self.method,
            "patterns": [p.to_json() for p in self.patterns],
        }
        if self.codes is not None:
            doc["codes"] = [[float(v) for v in z] for z in self.codes]
        return doc

    def to_sequence(self, tempo_bpm: float = 129.0) -> PatternSequence:
        return PatternSequence(self.patterns, tempo_bpm=tempo_bpm)


def lerp_codes(z_s: np.ndarray, z_g: np.ndarray, length: int) -> list[np.ndarray]:
    """Straight-line code walk; endpoints are returned bit-exactly."""
    z_s = np.asarray(z_s, dtype=np.float64)
    z_g = np.asarray(z_g, dtype=np.float64)
    if z_s.shape != z_g.shape:
        raise InterpError(f"code shape mismatch: {z_s.shape} vs {z_g.shape}")
    if length < 1:
        raise InterpError("length must be >= 1")
    out = []
    for i in range(length + 1):
        mu = i / length
        out.append((1.0 - mu) * z_s + mu * z_g)
    return out


def slerp_codes(z_s: np.ndarray, z_g: np.ndarray, length: int) -> list[np.ndarray]:
    """Great-circle code walk at constant angular speed.

    Falls back to LERP when the endpoints are nearly collinear
    (angle < 1e-6); rejects nearly antiparallel endpoints, where the
    rotation plane is underdetermined, with advice to use LERP.
    """
    z_s = np.asarray(z_s, dtype=np.float64)
    z_g = np.asarray(z_g, dtype=np.float64)
    if z_s.shape != z_g.shape:
        raise InterpError(f"code shape mismatch: {z_s.shape} vs {z_g.shape}")
    if length < 1:
        raise InterpError("length must be >= 1")
    norm_s = float(np.linalg.norm(z_s))
    norm_g = float(np.linalg.norm(z_g))
    if norm_s == 0.0 or norm_g == 0.0:
        raise ZeroNormError("slerp endpoints must have non-zero norm")
    cos_theta = float(np.clip(z_s @ z_g / (norm_s * norm_g), -1.0, 1.0))
    theta = math.acos(cos_theta)
    if theta < SLERP_DEGENERATE_ANGLE:
        return lerp_codes(z_s, z_g, length)
    if theta > math.pi - SLERP_ANTIPARALLEL_MARGIN:
        raise AntiparallelError(
            "endpoints are nearly antiparallel; the spherical arc is "
            "ambiguous - use lerp instead")
    sin_theta = math.sin(theta)
    out = []
    for i in range(length + 1):
        mu = i / length
        w_s = math.sin(theta * (1.0 - mu)) / sin_theta
        w_g = math.sin(theta * mu) / sin_theta
        out.append(w_s * z_s + w_g * z_g)
    return out


def _resolve(endpoint: DrumPattern | str, corpus) -> DrumPattern:
    if isinstance(endpoint, DrumPattern):
        return endpoint
    if corpus is None:
        raise UnknownPatternError(
            f"pattern id {endpoint!r} given but no corpus loaded")
    try:
        return corpus.get(endpoint)
    except KeyError:
        raise UnknownPatternError(f"no pattern with id {endpoint!r}") from None


def interpolate(model: VaeModel | None, request: InterpolationRequest,
                corpus=None) -> InterpolationResult:
    """Run the encode-walk-decode pipeline (or a crossfade baseline).

    Latent endpoints use the posterior means, so element 0 equals the
    model's reconstruction of the start pattern (not the pattern itself)
    and likewise for the goal.
    """
    x_s = _resolve(request.start, corpus)
    x_g = _resolve(request.goal, corpus)

    if request.method in CROSSFADE_METHODS:
        mode = "linear" if request.method == "crossfade_linear" else "equal_power"
        seq = crossfade(x_s, x_g, request.length, mode)
        return InterpolationResult(patterns=seq.patterns, codes=None,
                                   method=request.method)

    if model is None:
        raise MissingModelError(
            f"method {request.method!r} needs a trained model")
    z_s, _ = model.encode(x_s)
    z_g, _ = model.encode(x_g)
    walk = lerp_codes if request.method == "lerp" else slerp_codes
    codes = walk(z_s, z_g, request.length)
    patterns = tuple(
        binarize(model.decode(z), request.velocity_floor, genre="Generated")
        for z in codes
    )
    return InterpolationResult(patterns=patterns, codes=codes,
                               method=request.method)
