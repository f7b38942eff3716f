import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drumweave.midi import (
    END_OF_TRACK,
    META_TEMPO,
    TICKS_PER_QUARTER,
    TICKS_PER_STEP,
    InvalidVlqError,
    MalformedHeaderError,
    MetaEvent,
    MidiImport,
    NoMappedNotesError,
    NoteOff,
    NoteOn,
    SmfDocument,
    SmpteDivisionError,
    TruncatedChunkError,
    VlqRangeError,
    bpm_to_us_per_quarter,
    midi_to_patterns,
    parse_smf,
    pattern_to_midi,
    read_vlq,
    tempo_meta,
    write_smf,
    write_vlq,
)
from drumweave.patterns import (
    DrumPattern,
    GM_PERCUSSION_MAP,
    InstrumentMap,
    PatternSequence,
)

IMAP = GM_PERCUSSION_MAP


def minimal_file_bytes(division=96):
    header = b"MThd" + struct.pack(">IHHH", 6, 0, 1, division)
    track_body = b"\x00\xff\x2f\x00"
    return header + b"MTrk" + struct.pack(">I", len(track_body)) + track_body


class TestVlq:
    # reference pairs from the SMF spec's VLQ table
    KNOWN = [
        (0x00, b"\x00"),
        (0x40, b"\x40"),
        (0x7F, b"\x7f"),
        (0x80, b"\x81\x00"),
        (0x2000, b"\xc0\x00"),
        (0x3FFF, b"\xff\x7f"),
        (0x4000, b"\x81\x80\x00"),
        (0x0FFFFFFF, b"\xff\xff\xff\x7f"),
    ]

    @pytest.mark.parametrize("value,encoded", KNOWN)
    def test_known_encodings(self, value, encoded):
        assert write_vlq(value) == encoded
        assert read_vlq(encoded, 0, len(encoded)) == (value, len(encoded))

    @given(st.integers(0, 0x0FFFFFFF))
    def test_round_trip(self, value):
        data = write_vlq(value)
        assert read_vlq(data, 0, len(data)) == (value, len(data))

    def test_write_overflow(self):
        with pytest.raises(VlqRangeError):
            write_vlq(0x10000000)

    def test_read_five_byte_sequence(self):
        with pytest.raises(InvalidVlqError):
            read_vlq(b"\xff\xff\xff\xff\x7f", 0, 5)

    def test_read_truncated(self):
        with pytest.raises(TruncatedChunkError):
            read_vlq(b"\xff", 0, 1)


class TestParse:
    def test_minimal_file(self):
        doc = parse_smf(minimal_file_bytes())
        assert doc.division == 96
        assert doc.events == [(0, END_OF_TRACK)]

    def test_bad_magic(self):
        with pytest.raises(MalformedHeaderError):
            parse_smf(b"RIFF" + bytes(20))

    def test_smpte_division(self):
        with pytest.raises(SmpteDivisionError):
            parse_smf(minimal_file_bytes(division=0xE250))

    def test_format_2_rejected(self):
        header = b"MThd" + struct.pack(">IHHH", 6, 2, 1, 96)
        with pytest.raises(MalformedHeaderError):
            parse_smf(header + b"MTrk" + struct.pack(">I", 4) + b"\x00\xff\x2f\x00")

    def test_truncated_track(self):
        data = minimal_file_bytes()
        with pytest.raises(TruncatedChunkError):
            parse_smf(data[:-2])

    def test_fuzz_truncations_never_overread(self):
        seq = PatternSequence((_demo_pattern(),))
        data = write_smf(pattern_to_midi(seq, IMAP))
        for cut in range(len(data)):
            try:
                parse_smf(data[:cut])
            except (MalformedHeaderError, TruncatedChunkError, InvalidVlqError):
                pass

    def test_running_status_equals_explicit(self):
        # same two note-ons, one track written with running status
        explicit = b"\x00\x99\x24\x64" + b"\x18\x99\x26\x50" + b"\x00\xff\x2f\x00"
        running = b"\x00\x99\x24\x64" + b"\x18\x26\x50" + b"\x00\xff\x2f\x00"
        head = b"MThd" + struct.pack(">IHHH", 6, 0, 1, 96)

        def wrap(body):
            return head + b"MTrk" + struct.pack(">I", len(body)) + body

        assert parse_smf(wrap(explicit)).events == parse_smf(wrap(running)).events

    def test_format1_tracks_merged_by_time(self):
        head = b"MThd" + struct.pack(">IHHH", 6, 1, 2, 96)
        t1 = b"\x00\x99\x24\x64" + b"\x00\xff\x2f\x00"        # note at t=0
        t2 = b"\x0c\x99\x26\x50" + b"\x00\xff\x2f\x00"        # note at t=12

        def chunk(body):
            return b"MTrk" + struct.pack(">I", len(body)) + body

        doc = parse_smf(head + chunk(t2) + chunk(t1))
        times = [t for t, ev in doc.absolute_events() if isinstance(ev, NoteOn)]
        assert times == [0, 12]


class TestWrite:
    def test_empty_track_byte_layout(self):
        doc = SmfDocument(division=96, events=[(0, END_OF_TRACK)])
        data = write_smf(doc)
        # 14-byte header chunk + 8-byte track header + delta + FF 2F 00
        assert len(data) == 14 + 8 + 4
        assert data[:4] == b"MThd"
        assert data[14:18] == b"MTrk"

    def test_write_parse_round_trip_on_own_output(self):
        rng = np.random.default_rng(11)
        seq = PatternSequence(tuple(
            DrumPattern(np.round(rng.uniform(0, 1, (6, 64)) * (rng.random((6, 64)) < 0.2) * 127) / 127)
            for _ in range(3)
        ))
        doc = pattern_to_midi(seq, IMAP)
        data = write_smf(doc)
        assert write_smf(parse_smf(data)) == data
        assert parse_smf(data) == doc

    def test_tempo_meta_129_bpm(self):
        ev = tempo_meta(129)
        assert ev.data == bytes([0x07, 0x18, 0xDC])
        assert bpm_to_us_per_quarter(129) == 465_116
        doc = SmfDocument(division=96, events=[(0, ev), (0, END_OF_TRACK)])
        assert parse_smf(write_smf(doc)).tempo_us_per_quarter() == 465_116


def _demo_pattern():
    g = np.zeros((6, 64))
    g[0, 0] = 1.0
    g[1, 16] = 0.5
    g[2, ::4] = 0.75
    return DrumPattern(g)


class TestPatternToMidi:
    def test_single_hit_construction(self):
        g = np.zeros((6, 64))
        g[0, 0] = 1.0
        doc = pattern_to_midi(PatternSequence((DrumPattern(g),)), IMAP)
        abs_events = doc.absolute_events()
        ons = [(t, e) for t, e in abs_events if isinstance(e, NoteOn)]
        offs = [(t, e) for t, e in abs_events if isinstance(e, NoteOff)]
        assert ons == [(0, NoteOn(9, IMAP.note_for_row(0), 127))]
        assert offs == [(24, NoteOff(9, IMAP.note_for_row(0), 0))]

    def test_all_zero_pattern(self):
        doc = pattern_to_midi(PatternSequence((DrumPattern.zeros(),)), IMAP)
        kinds = [type(e) for _, e in doc.events]
        assert kinds == [MetaEvent, MetaEvent]
        assert doc.events[0][1].meta_type == META_TEMPO

    def test_one_measure_duration_at_129_bpm(self):
        doc = pattern_to_midi(PatternSequence((DrumPattern.zeros(),), tempo_bpm=129), IMAP)
        # tempo meta stores floor(60e6/129) us/quarter, 16 quarters total
        assert doc.duration_seconds() == pytest.approx(16 * 465_116 / 1e6, abs=1e-12)
        assert doc.duration_seconds() == pytest.approx(64 * (60.0 / 129.0) / 4.0, abs=1e-4)
        assert doc.duration_seconds() == pytest.approx(7.4419, abs=0.005)

    def test_simultaneous_offs_before_ons(self):
        g = np.zeros((6, 64))
        g[2, :] = 1.0  # hat on every step: off at t coincides with next on
        doc = pattern_to_midi(PatternSequence((DrumPattern(g),)), IMAP)
        prev_t, seen = -1, {}
        for t, ev in doc.absolute_events():
            if isinstance(ev, (NoteOn, NoteOff)):
                if t == prev_t and isinstance(ev, NoteOff):
                    assert not seen.get(t), "note-off after note-on at same tick"
                if isinstance(ev, NoteOn):
                    seen[t] = True
                prev_t = t


class TestMidiToPatterns:
    def test_round_trip_velocity_bound(self):
        rng = np.random.default_rng(12)
        grid = rng.uniform(0, 1, (6, 64)) * (rng.random((6, 64)) < 0.3)
        p = DrumPattern(grid)
        doc = pattern_to_midi(PatternSequence((p,)), IMAP)
        out = midi_to_patterns(doc, IMAP)
        assert len(out.patterns) == 1
        assert np.max(np.abs(out.patterns[0].grid - p.grid)) <= 1.0 / 254.0 + 1e-12

    def test_midpoint_ties_round_earlier(self):
        # note 12 ticks after step 0 sits exactly between steps 0 and 1
        events = [
            (0, tempo_meta(129)),
            (12, NoteOn(9, 36, 100)),
            (12, NoteOff(9, 36, 0)),
            (0, END_OF_TRACK),
        ]
        doc = SmfDocument(division=96, events=events)
        out = midi_to_patterns(doc, IMAP)
        assert out.patterns[0].grid[0, 0] == pytest.approx(100 / 127)
        assert out.patterns[0].grid[0, 1] == 0.0

    def test_130_step_stream_pads_to_three_patterns(self):
        events = [(0, tempo_meta(129))]
        prev = 0
        for step in range(130):
            t = step * TICKS_PER_STEP
            events.append((t - prev, NoteOn(9, 36, 90)))
            prev = t
        events.append((0, END_OF_TRACK))
        doc = SmfDocument(division=96, events=events)
        out = midi_to_patterns(doc, IMAP)
        assert len(out.patterns) == 3
        assert np.count_nonzero(out.patterns[2].grid) == 2  # steps 128, 129

    def test_unmapped_notes_counted(self):
        events = [
            (0, NoteOn(9, 36, 100)),
            (0, NoteOn(9, 60, 100)),  # not a mapped percussion note
            (0, END_OF_TRACK),
        ]
        out = midi_to_patterns(SmfDocument(96, events), IMAP)
        assert out.ignored_notes == 1

    def test_no_mapped_notes_is_error(self):
        events = [(0, NoteOn(9, 60, 100)), (0, END_OF_TRACK)]
        with pytest.raises(NoMappedNotesError):
            midi_to_patterns(SmfDocument(96, events), IMAP)

    def test_hit_positions_preserved_exactly(self):
        rng = np.random.default_rng(13)
        grid = (rng.random((6, 64)) < 0.25) * 1.0
        p = DrumPattern(grid)
        doc = pattern_to_midi(PatternSequence((p,)), IMAP)
        out = midi_to_patterns(doc, IMAP)
        assert np.array_equal(out.patterns[0].grid > 0, p.grid > 0)

    def test_quantization_honors_foreign_division(self):
        # division 480: a 1/16 step is 120 ticks
        events = [
            (0, NoteOn(9, 38, 64)),
            (480, NoteOn(9, 38, 64)),  # one quarter later = step 4
            (0, END_OF_TRACK),
        ]
        out = midi_to_patterns(SmfDocument(480, events), IMAP)
        g = out.patterns[0].grid
        assert g[1, 0] > 0 and g[1, 4] > 0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 63),
                          st.integers(1, 127)), min_size=1, max_size=40))
def test_property_midi_round_trip(hits):
    grid = np.zeros((6, 64))
    for row, step, vel in hits:
        grid[row, step] = vel / 127.0
    p = DrumPattern(grid)
    doc = pattern_to_midi(PatternSequence((p,)), IMAP)
    data = write_smf(doc)
    out = midi_to_patterns(parse_smf(data), IMAP)
    assert np.allclose(out.patterns[0].grid, p.grid, atol=1e-12)
