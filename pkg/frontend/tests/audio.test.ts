import { describe, expect, it, vi } from 'vitest';

import { layoutHits, stepSeconds, Transport } from '../src/audio';
import { Pattern } from '../src/types';

function patternWithHits(hits: Array<[number, number, number]>): Pattern {
  const grid = Array.from({ length: 6 }, () => Array(64).fill(0));
  for (const [row, step, velocity] of hits) grid[row]![step] = velocity;
  return { grid };
}

class ManualPlayer {
  time = 0;
  scheduled: Array<{ row: number; velocity: number; when: number }> = [];
  now() { return this.time; }
  play(row: number, velocity: number, when: number) {
    this.scheduled.push({ row, velocity, when });
  }
}

describe('layoutHits', () => {
  it('places hits at step boundaries at 129 BPM', () => {
    const dt = stepSeconds(129);
    expect(dt).toBeCloseTo(60 / 129 / 4, 12);
    const hits = layoutHits([patternWithHits([[0, 0, 1], [2, 16, 0.5]])], 129);
    expect(hits).toHaveLength(2);
    expect(hits[0]!.time).toBe(0);
    expect(hits[1]!.time).toBeCloseTo(16 * dt, 12);
  });

  it('concatenates patterns back to back', () => {
    const p = patternWithHits([[0, 0, 1]]);
    const hits = layoutHits([p, p], 120);
    expect(hits[1]!.time).toBeCloseTo(64 * stepSeconds(120), 12);
    expect(hits[1]!.pattern).toBe(1);
  });

  it('one measure at 129 BPM spans about 7.44 seconds', () => {
    expect(64 * stepSeconds(129)).toBeCloseTo(7.4419, 3);
  });
});

describe('Transport', () => {
  it('schedules hits inside the lookahead window only', () => {
    vi.useFakeTimers();
    const player = new ManualPlayer();
    const transport = new Transport(player, { lookaheadSeconds: 0.2, tickMs: 10 });
    transport.start([patternWithHits([[0, 0, 1], [1, 32, 1]])], 120);
    // at t=0 only the first hit (t~0.06) is inside the 0.2s horizon
    expect(player.scheduled).toHaveLength(1);
    player.time = 4.0;
    vi.advanceTimersByTime(20);
    expect(player.scheduled).toHaveLength(2);
    transport.stop();
    vi.useRealTimers();
  });

  it('loops when configured', () => {
    vi.useFakeTimers();
    const player = new ManualPlayer();
    const transport = new Transport(player, { loop: true, lookaheadSeconds: 0.5, tickMs: 10 });
    transport.start([patternWithHits([[0, 0, 1]])], 240);
    const first = player.scheduled.length;
    player.time = 15;
    vi.advanceTimersByTime(20);
    expect(player.scheduled.length).toBeGreaterThan(first);
    transport.stop();
    vi.useRealTimers();
  });

  it('stop halts within one tick and fires onStop', () => {
    vi.useFakeTimers();
    const player = new ManualPlayer();
    let stopped = false;
    const transport = new Transport(player, {
      tickMs: 10,
      onStop: () => { stopped = true; },
    });
    transport.start([patternWithHits([[0, 0, 1]])], 120);
    transport.stop();
    const count = player.scheduled.length;
    player.time = 10;
    vi.advanceTimersByTime(100);
    expect(player.scheduled.length).toBe(count);
    expect(stopped).toBe(true);
    expect(transport.playing).toBe(false);
    vi.useRealTimers();
  });

  it('announces pattern changes for highlighting', () => {
    vi.useFakeTimers();
    const seen: number[] = [];
    const player = new ManualPlayer();
    const transport = new Transport(player, {
      lookaheadSeconds: 100,
      tickMs: 10,
      onPattern: (i) => seen.push(i),
    });
    const p = patternWithHits([[0, 0, 1]]);
    transport.start([p, p, p], 480);
    expect(seen).toEqual([0, 1, 2]);
    transport.stop();
    vi.useRealTimers();
  });
});
