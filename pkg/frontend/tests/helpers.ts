// Test utilities: a fake in-memory service, a fake hit player, and a
// minimal SMF note-on extractor used to verify downloaded MIDI bytes.

import { Grid, Pattern } from '../src/types';
import { HitPlayer } from '../src/audio';

export function zeroGrid(): Grid {
  return Array.from({ length: 6 }, () => Array(64).fill(0));
}

export function demoPattern(id: string, genre: string, seed: number): Pattern {
  const grid = zeroGrid();
  for (let s = 0; s < 64; s += 4) grid[0]![s] = 1;
  grid[1]![(seed * 7) % 64] = 0.75;
  grid[2]![(seed * 13) % 64] = 0.5;
  return { id, genre, grid };
}

export class FakePlayer implements HitPlayer {
  hits: Array<{ row: number; velocity: number; when: number }> = [];
  private readonly t0 = Date.now();
  now(): number {
    return (Date.now() - this.t0) / 1000;
  }
  play(row: number, velocity: number, when: number): void {
    this.hits.push({ row, velocity, when });
  }
}

/** In-memory stand-in for the service, honoring the API contract. */
export function fakeServiceFetch(corpus: Pattern[]) {
  return async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input, 'http://fake');
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    const json = (doc: unknown, status = 200) =>
      new Response(JSON.stringify(doc), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    if (url.pathname === '/api/patterns') {
      const genre = url.searchParams.get('genre');
      const matching = corpus.filter((p) => !genre || p.genre === genre);
      return json({
        total: matching.length, page: 0, page_size: 200, patterns: matching,
      });
    }
    if (url.pathname === '/api/interpolate') {
      const resolve = (e: string | Pattern): Pattern | undefined =>
        typeof e === 'string' ? corpus.find((p) => p.id === e) : e;
      const start = resolve(body.start);
      const goal = resolve(body.goal);
      if (!start || !goal) {
        return json({ code: 'unknown_pattern', message: 'no such id' }, 404);
      }
      if (!Number.isInteger(body.length) || body.length < 1) {
        return json({ code: 'invalid_request', message: 'bad length' }, 422);
      }
      const patterns: Pattern[] = [];
      for (let i = 0; i <= body.length; i++) {
        const mu = i / body.length;
        patterns.push({
          genre: 'Generated',
          grid: start.grid.map((row, r) =>
            row.map((v, s) => (1 - mu) * v + mu * goal.grid[r]![s]!)) as Grid,
        });
      }
      const codes = body.method === 'lerp' || body.method === 'slerp'
        ? patterns.map((_, i) => [i, 0, 0, 0]) : undefined;
      return json({ method: body.method, patterns, codes });
    }
    if (url.pathname === '/api/swirl') {
      if (!Number.isInteger(body.steps) || body.steps < 2) {
        return json({ code: 'invalid_request', message: 'bad steps' }, 422);
      }
      const base = demoPattern('swirl', 'Generated', 3);
      const patterns = Array.from({ length: body.steps }, () => ({
        genre: 'Generated' as const,
        grid: base.grid.map((row) => [...row]) as Grid,
      }));
      return json({
        tempo_bpm: 129,
        patterns,
        metadata: { steps: body.steps, omegas: [2, 19, -20, 20], scale: 0.47985 },
      });
    }
    if (url.pathname === '/api/export') {
      return new Response(new Uint8Array([0x4d, 0x54, 0x68, 0x64]), {
        status: 200,
        headers: { 'Content-Type': 'audio/midi' },
      });
    }
    return json({ code: 'not_found', message: url.pathname }, 404);
  };
}

// --- tiny SMF note extractor (test oracle for downloaded files) -----------

const NOTE_TO_ROW = new Map<number, number>([
  [36, 0], [38, 1], [42, 2], [46, 3], [37, 4], [56, 5],
]);

export function extractGrids(data: Uint8Array): Grid[] {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  if (String.fromCharCode(...data.subarray(0, 4)) !== 'MThd') {
    throw new Error('not an SMF file');
  }
  const headerLen = view.getUint32(4);
  const division = view.getUint16(12);
  let pos = 8 + headerLen;
  if (String.fromCharCode(...data.subarray(pos, pos + 4)) !== 'MTrk') {
    throw new Error('missing MTrk');
  }
  const trackLen = view.getUint32(pos + 4);
  pos += 8;
  const end = pos + trackLen;

  const readVlq = (): number => {
    let value = 0;
    for (let i = 0; i < 4; i++) {
      const byte = data[pos++]!;
      value = (value << 7) | (byte & 0x7f);
      if (!(byte & 0x80)) return value;
    }
    throw new Error('bad VLQ');
  };

  const hits: Array<{ ticks: number; row: number; velocity: number }> = [];
  let time = 0;
  let running = 0;
  while (pos < end) {
    time += readVlq();
    let status = data[pos]!;
    if (status & 0x80) {
      pos += 1;
      running = status;
    } else {
      status = running;
    }
    if (status === 0xff) {
      const metaType = data[pos++]!;
      const len = readVlq();
      pos += len;
      if (metaType === 0x2f) break;
    } else if (status === 0xf0 || status === 0xf7) {
      pos += readVlq();
    } else {
      const kind = status >> 4;
      const dataLen = kind === 0xc || kind === 0xd ? 1 : 2;
      if (kind === 0x9 && data[pos + 1]! > 0) {
        const row = NOTE_TO_ROW.get(data[pos]!);
        if (row !== undefined) {
          hits.push({ ticks: time, row, velocity: data[pos + 1]! / 127 });
        }
      }
      pos += dataLen;
    }
  }

  const ticksPerStep = division / 4;
  const maxStep = Math.max(...hits.map((h) => Math.round(h.ticks / ticksPerStep)), 0);
  const nPatterns = Math.floor(maxStep / 64) + 1;
  const grids = Array.from({ length: nPatterns }, zeroGrid);
  for (const hit of hits) {
    const step = Math.round(hit.ticks / ticksPerStep);
    const grid = grids[Math.floor(step / 64)]!;
    const cell = grid[hit.row]!;
    cell[step % 64] = Math.max(cell[step % 64]!, hit.velocity);
  }
  return grids;
}
