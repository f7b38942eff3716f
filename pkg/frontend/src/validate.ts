// Client-side validation with the exact rules of the service schemas
// (schemas/*.schema.json in the repository root). The shared fixture
// file pins both sides to the same verdicts, so nothing malformed is
// ever sent over the wire.

import {
  Grid,
  InterpolateRequest,
  N_INSTRUMENTS,
  N_STEPS,
  SwirlRequest,
} from './types';

export const MAX_LENGTH = 256;
export const MAX_SWIRL_STEPS = 1024;
export const MAX_EXPORT_PATTERNS = 1024;

const METHODS = new Set([
  'lerp',
  'slerp',
  'crossfade_linear',
  'crossfade_equal_power',
]);

export type Verdict = { ok: true } | { ok: false; reason: string };

const fail = (reason: string): Verdict => ({ ok: false, reason });
const pass: Verdict = { ok: true };

export function validateGrid(grid: unknown): Verdict {
  if (!Array.isArray(grid) || grid.length !== N_INSTRUMENTS) {
    return fail(`grid must have ${N_INSTRUMENTS} rows`);
  }
  for (const row of grid) {
    if (!Array.isArray(row) || row.length !== N_STEPS) {
      return fail(`every grid row must have ${N_STEPS} cells`);
    }
    for (const cell of row) {
      if (typeof cell !== 'number' || !Number.isFinite(cell) || cell < 0 || cell > 1) {
        return fail('grid cells must be numbers in [0, 1]');
      }
    }
  }
  return pass;
}

function validateEndpoint(endpoint: unknown): Verdict {
  if (typeof endpoint === 'string') {
    return endpoint.length > 0 ? pass : fail('pattern id must be non-empty');
  }
  if (endpoint && typeof endpoint === 'object' && 'grid' in endpoint) {
    return validateGrid((endpoint as { grid: unknown }).grid);
  }
  return fail('endpoint must be a pattern id or a pattern object');
}

function validateFloor(floor: unknown): Verdict {
  if (floor === undefined) return pass;
  if (typeof floor !== 'number' || floor < 0 || floor >= 1) {
    return fail('velocity_floor must lie in [0, 1)');
  }
  return pass;
}

export function validateInterpolateRequest(req: Partial<InterpolateRequest>): Verdict {
  const start = validateEndpoint(req.start);
  if (!start.ok) return start;
  const goal = validateEndpoint(req.goal);
  if (!goal.ok) return goal;
  if (!Number.isInteger(req.length) || req.length! < 1 || req.length! > MAX_LENGTH) {
    return fail(`length must be an integer in [1, ${MAX_LENGTH}]`);
  }
  if (req.method !== undefined && !METHODS.has(req.method)) {
    return fail(`method must be one of ${[...METHODS].join(', ')}`);
  }
  return validateFloor(req.velocity_floor);
}

export function validateSwirlRequest(req: Partial<SwirlRequest>): Verdict {
  if (!Number.isInteger(req.steps) || req.steps! < 2 || req.steps! > MAX_SWIRL_STEPS) {
    return fail(`steps must be an integer in [2, ${MAX_SWIRL_STEPS}]`);
  }
  if (req.omegas !== undefined) {
    if (!Array.isArray(req.omegas) || req.omegas.length !== 4
        || req.omegas.some((w) => !Number.isInteger(w))) {
      return fail('omegas must be four integers');
    }
  }
  return validateFloor(req.velocity_floor);
}

export function validateExportRequest(doc: {
  tempo_bpm?: number;
  patterns?: { grid: Grid }[];
}): Verdict {
  if (doc.tempo_bpm !== undefined
      && (typeof doc.tempo_bpm !== 'number' || doc.tempo_bpm <= 0)) {
    return fail('tempo_bpm must be positive');
  }
  if (!Array.isArray(doc.patterns) || doc.patterns.length < 1
      || doc.patterns.length > MAX_EXPORT_PATTERNS) {
    return fail(`patterns must hold 1..${MAX_EXPORT_PATTERNS} entries`);
  }
  for (const p of doc.patterns) {
    const verdict = validateGrid(p?.grid);
    if (!verdict.ok) return verdict;
  }
  return pass;
}
