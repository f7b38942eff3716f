"""Drum pattern data model and pattern-space operations.

A pattern is a 6x64 grid of normalized note-on velocities: one row per
percussion instrument, one column per 1/16-note step, four bars of 16
steps each. Velocity 0.0 means "no hit at this step".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

N_INSTRUMENTS = 6
N_STEPS = 64
GRID_CELLS = N_INSTRUMENTS * N_STEPS

#: Row order of the grid, top to bottom.
INSTRUMENT_ROLES = (
    "bass drum",
    "snare drum",
    "closed hi-hat",
    "open hi-hat",
    "rimshot",
    "cowbell",
)

GENRES = frozenset({"Electro", "Techno", "IDM", "Generated"})

DEFAULT_TEMPO_BPM = 129.0

#: Playback floor below which decoder output is treated as silence.
DEFAULT_VELOCITY_FLOOR = 0.1


class PatternError(ValueError):
    """Raised when a grid or pattern constraint is violated."""


def _validate_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.shape != (N_INSTRUMENTS, N_STEPS):
        raise PatternError(
            f"grid must be {N_INSTRUMENTS}x{N_STEPS}, got {grid.shape}"
        )
    if not np.all(np.isfinite(grid)):
        raise PatternError("grid contains non-finite values")
    if grid.min() < 0.0 or grid.max() > 1.0:
        raise PatternError("grid velocities must lie in [0, 1]")
    return grid


@dataclass(frozen=True)
class DrumPattern:
    """One measure (4 bars, 64 sixteenth steps) for six instruments.

    The grid is stored read-only; all operations return new patterns.
    """

    grid: np.ndarray
    genre: str | None = None
    id: str | None = None

    def __post_init__(self) -> None:
        grid = _validate_grid(self.grid)
        if self.genre is not None and self.genre not in GENRES:
            raise PatternError(f"unknown genre tag: {self.genre!r}")
        grid = grid.copy()
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DrumPattern):
            return NotImplemented
        return (
            np.array_equal(self.grid, other.grid)
            and self.genre == other.genre
            and self.id == other.id
        )

    def same_grid(self, other: "DrumPattern") -> bool:
        """Exact cell-for-cell equality, ignoring id/genre tags."""
        return bool(np.array_equal(self.grid, other.grid))

    @classmethod
    def zeros(cls, genre: str | None = None, id: str | None = None) -> "DrumPattern":
        return cls(np.zeros((N_INSTRUMENTS, N_STEPS)), genre=genre, id=id)

    def to_json(self) -> dict:
        """Canonical wire format: {"id", "genre", "grid"}."""
        doc: dict = {"grid": [[float(v) for v in row] for row in self.grid]}
        if self.id is not None:
            doc["id"] = self.id
        if self.genre is not None:
            doc["genre"] = self.genre
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "DrumPattern":
        if "grid" not in doc:
            raise PatternError("pattern JSON missing 'grid'")
        return cls(np.array(doc["grid"], dtype=np.float64),
                   genre=doc.get("genre"), id=doc.get("id"))


@dataclass(frozen=True)
class InstrumentMap:
    """Maps the six fixed instrument rows to MIDI note numbers."""

    notes: tuple[int, ...] = (36, 38, 42, 46, 37, 56)

    def __post_init__(self) -> None:
        notes = tuple(int(n) for n in self.notes)
        if len(notes) != N_INSTRUMENTS:
            raise PatternError(f"instrument map needs {N_INSTRUMENTS} notes")
        if len(set(notes)) != N_INSTRUMENTS:
            raise PatternError("instrument MIDI notes must be distinct")
        if any(n < 0 or n > 127 for n in notes):
            raise PatternError("MIDI note numbers must lie in [0, 127]")
        object.__setattr__(self, "notes", notes)

    def note_for_row(self, row: int) -> int:
        return self.notes[row]

    def row_for_note(self, note: int) -> int | None:
        try:
            return self.notes.index(note)
        except ValueError:
            return None


GM_PERCUSSION_MAP = InstrumentMap()


@dataclass(frozen=True)
class PatternSequence:
    """An ordered run of patterns played back-to-back at one tempo."""

    patterns: tuple[DrumPattern, ...]
    tempo_bpm: float = DEFAULT_TEMPO_BPM

    def __post_init__(self) -> None:
        patterns = tuple(self.patterns)
        if not patterns:
            raise PatternError("pattern sequence must be non-empty")
        if not self.tempo_bpm > 0:
            raise PatternError("tempo must be positive")
        object.__setattr__(self, "patterns", patterns)

    def __len__(self) -> int:
        return len(self.patterns)

    def to_json(self) -> dict:
        return {
            "tempo_bpm": float(self.tempo_bpm),
            "patterns": [p.to_json() for p in self.patterns],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PatternSequence":
        if "patterns" not in doc:
            raise PatternError("sequence JSON missing 'patterns'")
        patterns = tuple(DrumPattern.from_json(p) for p in doc["patterns"])
        return cls(patterns, tempo_bpm=float(doc.get("tempo_bpm", DEFAULT_TEMPO_BPM)))


def flatten(pattern: DrumPattern) -> np.ndarray:
    """Row-major serialization of the grid into a length-384 vector."""
    return pattern.grid.reshape(GRID_CELLS).copy()


def unflatten(vector: np.ndarray, genre: str | None = None,
              id: str | None = None) -> DrumPattern:
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (GRID_CELLS,):
        raise PatternError(f"expected length-{GRID_CELLS} vector, got {vector.shape}")
    return DrumPattern(vector.reshape(N_INSTRUMENTS, N_STEPS), genre=genre, id=id)


def crossfade(x_s: DrumPattern, x_g: DrumPattern, length: int,
              mode: str = "linear") -> PatternSequence:
    """Pattern-space fade from ``x_s`` to ``x_g`` in ``length`` steps.

    Linear mode mixes with weights (1-mu, mu); equal-power mode with
    (cos(mu*pi/2), sin(mu*pi/2)). Equal-power sums can exceed 1 when both
    cells are hot, so cells are clamped to 1.0. Returns length+1 patterns
    whose endpoints equal the inputs exactly.
    """
    if mode not in ("linear", "equal_power"):
        raise PatternError(f"unknown crossfade mode: {mode!r}")
    if length < 1:
        raise PatternError("crossfade length must be >= 1")
    steps = []
    for i in range(length + 1):
        mu = i / length
        if mode == "linear":
            grid = (1.0 - mu) * x_s.grid + mu * x_g.grid
        else:
            grid = math.cos(mu * math.pi / 2) * x_s.grid \
                + math.sin(mu * math.pi / 2) * x_g.grid
            grid = np.minimum(grid, 1.0)
        steps.append(DrumPattern(grid, genre="Generated"))
    return PatternSequence(tuple(steps))


def binarize(grid: np.ndarray | DrumPattern, velocity_floor: float = DEFAULT_VELOCITY_FLOOR,
             genre: str | None = None, id: str | None = None) -> DrumPattern:
    """Zero out cells below the floor; keep velocities of the rest.

    The decoder emits per-cell probabilities in (0, 1); playback and
    export need a discrete "hit or silence" decision per cell.
    """
    if not 0.0 <= velocity_floor < 1.0:
        raise PatternError("velocity_floor must lie in [0, 1)")
    if isinstance(grid, DrumPattern):
        genre = genre or grid.genre
        id = id or grid.id
        grid = grid.grid
    grid = _validate_grid(grid)
    out = np.where(grid >= velocity_floor, grid, 0.0)
    return DrumPattern(out, genre=genre, id=id)


def pattern_distance(a: DrumPattern, b: DrumPattern) -> float:
    """Euclidean distance between flattened grids."""
    return float(np.linalg.norm(a.grid - b.grid))
