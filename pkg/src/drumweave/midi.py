"""Standard MIDI File (SMF) reader/writer and pattern conversions.

Reads format 0 and format 1 files (format-1 tracks are merged by absolute
time into a single event stream) and writes deterministic format 0 bytes:
explicit status everywhere, minimal-length variable-length quantities.
Patterns map to channel-10 percussion notes at 96 ticks per quarter note,
24 ticks per 1/16 step.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from drumweave.patterns import (
    N_INSTRUMENTS,
    N_STEPS,
    DrumPattern,
    InstrumentMap,
    PatternSequence,
)

TICKS_PER_QUARTER = 96
TICKS_PER_STEP = TICKS_PER_QUARTER // 4  # 1/16-note grid

VLQ_MAX = 0x0FFFFFFF

META_END_OF_TRACK = 0x2F
META_TEMPO = 0x51

PERCUSSION_CHANNEL = 9  # MIDI channel 10, zero-indexed


class SmfError(ValueError):
    """Base class for SMF parse/serialize failures."""


class MalformedHeaderError(SmfError):
    """Missing/invalid MThd chunk or unsupported format number."""


class TruncatedChunkError(SmfError):
    """Byte stream ends before a declared chunk or event completes."""


class InvalidVlqError(SmfError):
    """Variable-length quantity longer than four bytes."""


class VlqRangeError(SmfError):
    """Delta time exceeds the representable VLQ range on write."""


class SmpteDivisionError(SmfError):
    """SMPTE time division is not supported."""


class NoMappedNotesError(SmfError):
    """Document contains no note-on events on mapped note numbers."""


@dataclass(frozen=True)
class NoteOn:
    channel: int
    note: int
    velocity: int


@dataclass(frozen=True)
class NoteOff:
    channel: int
    note: int
    velocity: int


@dataclass(frozen=True)
class ChannelEvent:
    """Any other channel voice message, preserved opaquely."""

    status: int
    data: bytes


@dataclass(frozen=True)
class MetaEvent:
    meta_type: int
    data: bytes


@dataclass(frozen=True)
class SysexEvent:
    status: int  # 0xF0 or 0xF7
    data: bytes


Event = Union[NoteOn, NoteOff, ChannelEvent, MetaEvent, SysexEvent]


@dataclass
class SmfDocument:
    """A single merged track of (delta-time, event) pairs.

    Delta times are in ticks of ``division`` (pulses per quarter note).
    The track always ends with an end-of-track meta event.
    """

    division: int
    events: list[tuple[int, Event]] = field(default_factory=list)

    def absolute_events(self) -> list[tuple[int, Event]]:
        out, t = [], 0
        for delta, ev in self.events:
            t += delta
            out.append((t, ev))
        return out

    def tempo_us_per_quarter(self) -> int | None:
        """First tempo meta event, in microseconds per quarter note."""
        for _, ev in self.events:
            if isinstance(ev, MetaEvent) and ev.meta_type == META_TEMPO:
                return int.from_bytes(ev.data, "big")
        return None

    def duration_seconds(self) -> float:
        """Playing time up to the end-of-track event at the file tempo."""
        mpqn = self.tempo_us_per_quarter() or 500_000
        total_ticks = sum(delta for delta, _ in self.events)
        return total_ticks / self.division * mpqn / 1e6


def bpm_to_us_per_quarter(bpm: float) -> int:
    return math.floor(60_000_000 / bpm)


def tempo_meta(bpm: float) -> MetaEvent:
    mpqn = bpm_to_us_per_quarter(bpm)
    if not 0 < mpqn <= 0xFFFFFF:
        raise SmfError(f"tempo {bpm} BPM not encodable in 24-bit field")
    return MetaEvent(META_TEMPO, mpqn.to_bytes(3, "big"))


END_OF_TRACK = MetaEvent(META_END_OF_TRACK, b"")


# --- variable-length quantities -------------------------------------------

def read_vlq(data: bytes, pos: int, end: int) -> tuple[int, int]:
    """Decode a VLQ starting at ``pos``; returns (value, next position)."""
    value = 0
    for i in range(4):
        if pos >= end:
            raise TruncatedChunkError("chunk ends inside a variable-length quantity")
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
    raise InvalidVlqError("variable-length quantity exceeds four bytes")


def write_vlq(value: int) -> bytes:
    if value < 0 or value > VLQ_MAX:
        raise VlqRangeError(f"value {value} outside VLQ range [0, {VLQ_MAX}]")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(chunks))


# --- parsing ---------------------------------------------------------------

_CHANNEL_DATA_LEN = {0x8: 2, 0x9: 2, 0xA: 2, 0xB: 2, 0xC: 1, 0xD: 1, 0xE: 2}


def _parse_track_events(data: bytes, start: int, end: int) -> list[tuple[int, Event]]:
    """Parse one MTrk payload; never reads outside [start, end)."""
    events: list[tuple[int, Event]] = []
    pos = start
    running_status: int | None = None
    while pos < end:
        delta, pos = read_vlq(data, pos, end)
        if pos >= end:
            raise TruncatedChunkError("chunk ends after a delta time")
        first = data[pos]
        if first & 0x80:
            status = first
            pos += 1
        else:
            if running_status is None:
                raise SmfError(f"data byte 0x{first:02X} with no running status")
            status = running_status

        if status == 0xFF:
            if pos >= end:
                raise TruncatedChunkError("truncated meta event")
            meta_type = data[pos]
            pos += 1
            length, pos = read_vlq(data, pos, end)
            if pos + length > end:
                raise TruncatedChunkError("meta event data exceeds chunk")
            ev: Event = MetaEvent(meta_type, bytes(data[pos:pos + length]))
            pos += length
            running_status = None
            events.append((delta, ev))
            if meta_type == META_END_OF_TRACK:
                break
        elif status in (0xF0, 0xF7):
            length, pos = read_vlq(data, pos, end)
            if pos + length > end:
                raise TruncatedChunkError("sysex data exceeds chunk")
            events.append((delta, SysexEvent(status, bytes(data[pos:pos + length]))))
            pos += length
            running_status = None
        elif status >= 0x80:
            kind = status >> 4
            if kind not in _CHANNEL_DATA_LEN:
                raise SmfError(f"unexpected status byte 0x{status:02X}")
            n = _CHANNEL_DATA_LEN[kind]
            if pos + n > end:
                raise TruncatedChunkError("truncated channel event")
            payload = data[pos:pos + n]
            pos += n
            channel = status & 0x0F
            if kind == 0x9:
                ev = NoteOn(channel, payload[0], payload[1])
            elif kind == 0x8:
                ev = NoteOff(channel, payload[0], payload[1])
            else:
                ev = ChannelEvent(status, bytes(payload))
            running_status = status
            events.append((delta, ev))
        else:
            raise SmfError(f"unexpected byte 0x{status:02X} in track")
    if not events or not _is_end_of_track(events[-1][1]):
        # tolerate absent end-of-track on foreign files
        events.append((0, END_OF_TRACK))
    return events


def _is_end_of_track(ev: Event) -> bool:
    return isinstance(ev, MetaEvent) and ev.meta_type == META_END_OF_TRACK


def _merge_tracks(tracks: list[list[tuple[int, Event]]]) -> list[tuple[int, Event]]:
    """Merge format-1 tracks by absolute time, stable within a track."""
    tagged: list[tuple[int, int, int, Event]] = []
    end_time = 0
    for track_idx, track in enumerate(tracks):
        t = 0
        for order, (delta, ev) in enumerate(track):
            t += delta
            if _is_end_of_track(ev):
                end_time = max(end_time, t)
                continue
            tagged.append((t, track_idx, order, ev))
    tagged.sort(key=lambda item: (item[0], item[1], item[2]))
    merged: list[tuple[int, Event]] = []
    prev = 0
    for t, _, _, ev in tagged:
        merged.append((t - prev, ev))
        prev = t
    merged.append((max(end_time - prev, 0), END_OF_TRACK))
    return merged


def parse_smf(data: bytes) -> SmfDocument:
    """Parse SMF bytes into a single-track document.

    Accepts format 0 and 1; unknown chunk types between tracks are
    skipped, unknown meta/sysex events inside tracks are preserved.
    """
    if len(data) < 14:
        raise MalformedHeaderError("file shorter than an SMF header")
    if data[0:4] != b"MThd":
        raise MalformedHeaderError("missing MThd magic")
    header_len = struct.unpack(">I", data[4:8])[0]
    if header_len < 6:
        raise MalformedHeaderError(f"header length {header_len} < 6")
    if 8 + header_len > len(data):
        raise TruncatedChunkError("declared header length exceeds file")
    fmt, ntrks, division = struct.unpack(">HHH", data[8:14])
    if fmt not in (0, 1):
        raise MalformedHeaderError(f"unsupported SMF format {fmt}")
    if division & 0x8000:
        raise SmpteDivisionError("SMPTE time division is not supported")
    if division == 0:
        raise MalformedHeaderError("zero time division")

    pos = 8 + header_len
    tracks: list[list[tuple[int, Event]]] = []
    while pos < len(data) and len(tracks) < ntrks:
        if pos + 8 > len(data):
            raise TruncatedChunkError("truncated chunk header")
        chunk_type = data[pos:pos + 4]
        chunk_len = struct.unpack(">I", data[pos + 4:pos + 8])[0]
        body_start = pos + 8
        body_end = body_start + chunk_len
        if body_end > len(data):
            raise TruncatedChunkError(
                f"chunk {chunk_type!r} declares {chunk_len} bytes past end of file"
            )
        if chunk_type == b"MTrk":
            tracks.append(_parse_track_events(data, body_start, body_end))
        # unknown chunk types are skipped
        pos = body_end
    if len(tracks) < ntrks:
        raise TruncatedChunkError(
            f"header declares {ntrks} tracks, found {len(tracks)}"
        )
    if not tracks:
        raise MalformedHeaderError("file contains no tracks")

    if len(tracks) == 1:
        events = tracks[0]
    else:
        events = _merge_tracks(tracks)
    return SmfDocument(division=division, events=events)


# --- writing ---------------------------------------------------------------

def _serialize_event(ev: Event) -> bytes:
    if isinstance(ev, NoteOn):
        return bytes([0x90 | ev.channel, ev.note, ev.velocity])
    if isinstance(ev, NoteOff):
        return bytes([0x80 | ev.channel, ev.note, ev.velocity])
    if isinstance(ev, ChannelEvent):
        return bytes([ev.status]) + ev.data
    if isinstance(ev, MetaEvent):
        return bytes([0xFF, ev.meta_type]) + write_vlq(len(ev.data)) + ev.data
    if isinstance(ev, SysexEvent):
        return bytes([ev.status]) + write_vlq(len(ev.data)) + ev.data
    raise SmfError(f"cannot serialize {ev!r}")


def write_smf(doc: SmfDocument) -> bytes:
    """Serialize to format 0 bytes; explicit status, minimal VLQs."""
    body = bytearray()
    for delta, ev in doc.events:
        body += write_vlq(delta)
        body += _serialize_event(ev)
    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, doc.division)
    track = b"MTrk" + struct.pack(">I", len(body)) + bytes(body)
    return header + track


# --- pattern conversions ----------------------------------------------------

def pattern_to_midi(seq: PatternSequence, imap: InstrumentMap) -> SmfDocument:
    """Render a pattern sequence as one percussion track.

    One tempo event at t=0, note-on velocity round(cell*127) for audible
    cells, matching note-off one grid step later; patterns concatenated
    back-to-back, 64 steps each. End-of-track lands on the final measure
    boundary so file duration equals the musical duration.
    """
    notes: list[tuple[int, int, Event]] = []  # (abs time, sort class, event)
    for k, pattern in enumerate(seq.patterns):
        base = k * N_STEPS * TICKS_PER_STEP
        for row in range(N_INSTRUMENTS):
            note = imap.note_for_row(row)
            for step in range(N_STEPS):
                cell = pattern.grid[row, step]
                if cell <= 0.0:
                    continue
                velocity = math.floor(cell * 127.0 + 0.5)
                if velocity < 1:
                    continue
                t = base + step * TICKS_PER_STEP
                notes.append((t, 1, NoteOn(PERCUSSION_CHANNEL, note, velocity)))
                notes.append((t + TICKS_PER_STEP, 0,
                              NoteOff(PERCUSSION_CHANNEL, note, 0)))
    # note-offs sort ahead of simultaneous note-ons
    notes.sort(key=lambda item: (item[0], item[1], item[2].note))

    events: list[tuple[int, Event]] = [(0, tempo_meta(seq.tempo_bpm))]
    prev = 0
    for t, _, ev in notes:
        events.append((t - prev, ev))
        prev = t
    total = len(seq.patterns) * N_STEPS * TICKS_PER_STEP
    events.append((max(total - prev, 0), END_OF_TRACK))
    return SmfDocument(division=TICKS_PER_QUARTER, events=events)


def _quantize_step(ticks: int, division: int) -> int:
    """Nearest 1/16 step; exact midpoints round toward the earlier step."""
    num = 4 * ticks  # step position = ticks / (division/4) = num / division
    step = (2 * num + division) // (2 * division)
    if (2 * num) % (2 * division) == division:
        step -= 1
    return step


@dataclass
class MidiImport:
    """Patterns recovered from a document plus an ignored-event count."""

    patterns: list[DrumPattern]
    ignored_notes: int


def midi_to_patterns(doc: SmfDocument, imap: InstrumentMap) -> MidiImport:
    """Quantize note-ons to the 1/16 grid and cut into 64-step patterns.

    Velocities are normalized to [0, 1]; collisions on one cell keep the
    loudest hit; the final partial pattern is zero-padded. Note-ons on
    unmapped note numbers are counted and dropped.
    """
    hits: list[tuple[int, int, float]] = []  # (step, row, velocity)
    ignored = 0
    for t, ev in doc.absolute_events():
        if not isinstance(ev, NoteOn) or ev.velocity == 0:
            continue
        row = imap.row_for_note(ev.note)
        if row is None:
            ignored += 1
            continue
        step = _quantize_step(t, doc.division)
        hits.append((step, row, ev.velocity / 127.0))
    if not hits:
        raise NoMappedNotesError("no note-on events on mapped note numbers")

    max_step = max(step for step, _, _ in hits)
    n_patterns = max_step // N_STEPS + 1
    grids = np.zeros((n_patterns, N_INSTRUMENTS, N_STEPS))
    for step, row, velocity in hits:
        k, s = divmod(step, N_STEPS)
        grids[k, row, s] = max(grids[k, row, s], velocity)
    patterns = [DrumPattern(g) for g in grids]
    return MidiImport(patterns=patterns, ignored_notes=ignored)
