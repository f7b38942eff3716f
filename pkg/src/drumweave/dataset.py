"""Corpus management: synthetic genre corpora, MIDI ingest, dedup, split.

The original pattern collection behind this project is not distributed;
a seeded generator produces a stand-in corpus with three caricature
genre templates (Techno, Electro, IDM). Velocities are quantized to the
127-level MIDI grid so disk round-trips are exact.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from drumweave.midi import (
    MidiImport,
    SmfError,
    midi_to_patterns,
    parse_smf,
    pattern_to_midi,
    write_smf,
)
from drumweave.nn import Prng
from drumweave.patterns import (
    GENRES,
    N_INSTRUMENTS,
    N_STEPS,
    DrumPattern,
    GM_PERCUSSION_MAP,
    InstrumentMap,
    PatternSequence,
)

BASS, SNARE, CLOSED_HAT, OPEN_HAT, RIMSHOT, COWBELL = range(6)

GENRE_ORDER = ("IDM", "Electro", "Techno")

MANIFEST_FILE = "manifest.json"


class CorpusError(ValueError):
    """Raised for unreadable, empty, or inconsistent corpora."""


@dataclass
class Corpus:
    patterns: list[DrumPattern]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [p.id for p in self.patterns]
        if any(i is None for i in ids):
            raise CorpusError("every corpus pattern needs an id")
        if len(set(ids)) != len(ids):
            raise CorpusError("corpus ids must be unique")

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def get(self, pattern_id: str) -> DrumPattern:
        for p in self.patterns:
            if p.id == pattern_id:
                return p
        raise KeyError(pattern_id)

    def by_genre(self, genre: str) -> list[DrumPattern]:
        return [p for p in self.patterns if p.genre == genre]

    def genre_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for p in self.patterns:
            counts[p.genre or "Generated"] = counts.get(p.genre or "Generated", 0) + 1
        return counts

    def fingerprint(self) -> str:
        """SHA-256 over the grid bytes in corpus order."""
        digest = hashlib.sha256()
        for p in self.patterns:
            digest.update(p.grid.tobytes())
        return digest.hexdigest()


def _quantize(grid: np.ndarray) -> np.ndarray:
    return np.round(np.clip(grid, 0.0, 1.0) * 127.0) / 127.0


def _vel(rng: Prng, low: int, high: int) -> float:
    return int(rng.integers(high - low + 1) + low) / 127.0


def _techno(rng: Prng) -> np.ndarray:
    """Four-on-the-floor bass, off-beat open hats, sparse color."""
    g = np.zeros((N_INSTRUMENTS, N_STEPS))
    for s in range(0, N_STEPS, 4):
        g[BASS, s] = _vel(rng, 110, 127)
    for s in range(2, N_STEPS, 4):
        if rng.uniform(0, 1, ()) < 0.9:
            g[OPEN_HAT, s] = _vel(rng, 70, 110)
    hat_step = 2 if rng.uniform(0, 1, ()) < 0.5 else 4
    for s in range(0, N_STEPS, hat_step):
        if rng.uniform(0, 1, ()) < 0.6:
            g[CLOSED_HAT, s] = _vel(rng, 40, 80)
    if rng.uniform(0, 1, ()) < 0.4:
        for s in range(8, N_STEPS, 16):
            g[SNARE, s] = _vel(rng, 80, 110)
    if rng.uniform(0, 1, ()) < 0.25:
        g[RIMSHOT, int(rng.integers(N_STEPS))] = _vel(rng, 40, 90)
    return g


def _electro(rng: Prng) -> np.ndarray:
    """Syncopated bass, backbeat snare on steps 4/12 of each bar, busy hats."""
    g = np.zeros((N_INSTRUMENTS, N_STEPS))
    sync_pool = (0, 3, 6, 10, 11, 14)
    for bar in range(0, N_STEPS, 16):
        g[BASS, bar] = _vel(rng, 105, 127)
        for off in sync_pool[1:]:
            if rng.uniform(0, 1, ()) < 0.35:
                g[BASS, bar + off] = _vel(rng, 85, 120)
        g[SNARE, bar + 4] = _vel(rng, 100, 127)
        g[SNARE, bar + 12] = _vel(rng, 100, 127)
    for s in range(0, N_STEPS, 2):
        if rng.uniform(0, 1, ()) < 0.85:
            accent = 25 if s % 4 == 0 else 0
            g[CLOSED_HAT, s] = _vel(rng, 45 + accent, 75 + accent)
    if rng.uniform(0, 1, ()) < 0.5:
        for s in range(6, N_STEPS, 16):
            g[COWBELL, s] = _vel(rng, 50, 90)
    return g


def _idm(rng: Prng) -> np.ndarray:
    """Sparse irregular placements with ghost-note velocities."""
    g = np.zeros((N_INSTRUMENTS, N_STEPS))
    n_bass = int(rng.integers(5)) + 4
    for s in sorted(rng.permutation(N_STEPS)[:n_bass]):
        g[BASS, s] = _vel(rng, 60, 127)
    n_snare = int(rng.integers(4)) + 2
    for s in rng.permutation(N_STEPS)[:n_snare]:
        ghost = rng.uniform(0, 1, ()) < 0.5
        g[SNARE, s] = _vel(rng, 20, 55) if ghost else _vel(rng, 85, 127)
    row_pool = (CLOSED_HAT, OPEN_HAT, RIMSHOT, COWBELL)
    for row in row_pool:
        n = int(rng.integers(7))
        for s in rng.permutation(N_STEPS)[:n]:
            g[row, s] = _vel(rng, 15, 110)
    # glitchy hat burst somewhere in the last bar
    if rng.uniform(0, 1, ()) < 0.6:
        start = 48 + int(rng.integers(12))
        for k in range(int(rng.integers(3)) + 2):
            if start + k < N_STEPS:
                g[CLOSED_HAT, start + k] = _vel(rng, 20, 60)
    return g


_TEMPLATES = {"Techno": _techno, "Electro": _electro, "IDM": _idm}


def synth_corpus(counts: Mapping[str, int], seed: int) -> Corpus:
    """Deterministic synthetic corpus; duplicates dropped after generation."""
    for genre in counts:
        if genre not in _TEMPLATES:
            raise CorpusError(f"no template for genre {genre!r}")
        if counts[genre] < 1:
            raise CorpusError("per-genre counts must be >= 1")
    master = Prng(seed)
    patterns: list[DrumPattern] = []
    seen: set[bytes] = set()
    duplicates = 0
    for genre in GENRE_ORDER:
        if genre not in counts:
            continue
        template = _TEMPLATES[genre]
        rng = master.derive()
        for i in range(counts[genre]):
            grid = _quantize(template(rng))
            key = grid.tobytes()
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            patterns.append(DrumPattern(
                grid, genre=genre, id=f"{genre.lower()}-{i:04d}"))
    corpus = Corpus(patterns, provenance={
        "kind": "synthetic",
        "seed": seed,
        "counts": {g: int(counts[g]) for g in GENRE_ORDER if g in counts},
        "duplicates_dropped": duplicates,
    })
    return corpus


@dataclass
class IngestReport:
    corpus: Corpus
    genre_counts: dict[str, int]
    duplicates_dropped: int
    unmapped_notes: int
    files_read: int


def ingest(directory: Path | str,
           imap: InstrumentMap = GM_PERCUSSION_MAP) -> IngestReport:
    """Read every .mid under ``directory``; subdirectory names carry genres.

    Patterns are deduplicated by exact grid equality (first occurrence
    wins); files that fail to parse raise, unreadable directories raise.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise CorpusError(f"{directory} is not a readable directory")
    files = sorted(directory.rglob("*.mid"))
    patterns: list[DrumPattern] = []
    seen: set[bytes] = set()
    duplicates = 0
    unmapped = 0
    counter = 0
    for path in files:
        genre = path.parent.name if path.parent.name in GENRES else None
        if genre is None and path.parent != directory:
            genre = "Generated"
        doc = parse_smf(path.read_bytes())
        try:
            imported = midi_to_patterns(doc, imap)
        except SmfError:
            continue  # no mapped percussion in this file
        unmapped += imported.ignored_notes
        for p in imported.patterns:
            key = p.grid.tobytes()
            if key in seen:
                duplicates += 1
                continue
            seen.add(key)
            patterns.append(DrumPattern(p.grid, genre=genre or "Generated",
                                        id=f"{path.stem}-{counter:04d}"))
            counter += 1
    if not patterns:
        raise CorpusError(f"no patterns ingested from {directory}")
    corpus = Corpus(patterns, provenance={
        "kind": "ingest",
        "source": str(directory),
        "files": len(files),
    })
    report = IngestReport(
        corpus=corpus,
        genre_counts=corpus.genre_counts(),
        duplicates_dropped=duplicates,
        unmapped_notes=unmapped,
        files_read=len(files),
    )
    return report


def save_corpus(corpus: Corpus, directory: Path | str,
                imap: InstrumentMap = GM_PERCUSSION_MAP,
                tempo_bpm: float = 129.0) -> None:
    """Write ``<genre>/<id>.mid`` files plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for p in corpus.patterns:
        genre_dir = directory / (p.genre or "Generated")
        genre_dir.mkdir(exist_ok=True)
        doc = pattern_to_midi(PatternSequence((p,), tempo_bpm=tempo_bpm), imap)
        (genre_dir / f"{p.id}.mid").write_bytes(write_smf(doc))
    manifest = {
        "ids": [p.id for p in corpus.patterns],
        "genres": {p.id: p.genre for p in corpus.patterns},
        "fingerprint": corpus.fingerprint(),
        "seed": corpus.provenance.get("seed"),
        "provenance": corpus.provenance,
    }
    (directory / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_corpus(directory: Path | str,
                imap: InstrumentMap = GM_PERCUSSION_MAP) -> Corpus:
    """Read a corpus saved by :func:`save_corpus`, restoring manifest ids."""
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    if not manifest_path.exists():
        return ingest(directory, imap).corpus
    manifest = json.loads(manifest_path.read_text())
    genres = manifest["genres"]
    patterns = []
    for pattern_id in manifest["ids"]:
        genre = genres[pattern_id]
        path = directory / (genre or "Generated") / f"{pattern_id}.mid"
        imported = midi_to_patterns(parse_smf(path.read_bytes()), imap)
        if len(imported.patterns) != 1:
            raise CorpusError(f"{path}: expected exactly one pattern")
        patterns.append(DrumPattern(imported.patterns[0].grid,
                                    genre=genre, id=pattern_id))
    return Corpus(patterns, provenance=manifest.get("provenance", {}))


def split(corpus: Corpus, fractions: tuple[float, float],
          seed: int) -> tuple[list[DrumPattern], list[DrumPattern]]:
    """Stratified-by-genre train/validation split; disjoint and exhaustive."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise CorpusError("fractions must sum to 1")
    if any(f < 0 for f in fractions):
        raise CorpusError("fractions must be non-negative")
    rng = Prng(seed)
    train: list[DrumPattern] = []
    val: list[DrumPattern] = []
    genres = sorted({p.genre or "Generated" for p in corpus.patterns})
    for genre in genres:
        group = [p for p in corpus.patterns if (p.genre or "Generated") == genre]
        order = rng.permutation(len(group))
        n_train = int(round(fractions[0] * len(group)))
        for rank, idx in enumerate(order):
            (train if rank < n_train else val).append(group[idx])
    return train, val
