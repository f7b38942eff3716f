// Session state for the instrument: endpoint selection (ids or edited
// grids), interpolation parameters, swirl parameters, and the last
// generation result. Pure state transitions; the DOM layer subscribes.

import { Grid, InterpolationMethod, InterpolationResult, Pattern } from './types';
import { validateInterpolateRequest, validateSwirlRequest, Verdict } from './validate';

export type Slot = 'start' | 'goal';

export type SessionState = {
  start: Pattern | null;
  goal: Pattern | null;
  activeSlot: Slot;
  length: number;
  method: InterpolationMethod;
  swirlSteps: number;
  tempoBpm: number;
  lastResult: InterpolationResult | null;
};

export function initialState(): SessionState {
  return {
    start: null,
    goal: null,
    activeSlot: 'start',
    length: 6,
    method: 'slerp',
    swirlSteps: 16,
    tempoBpm: 129,
    lastResult: null,
  };
}

export type Listener = (state: SessionState) => void;

export class Session {
  private state = initialState();
  private listeners: Listener[] = [];

  get current(): SessionState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private commit(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Assign a browsed pattern to the active slot, then arm the other. */
  pick(pattern: Pattern): void {
    const slot = this.state.activeSlot;
    this.commit({
      [slot]: clonePattern(pattern),
      activeSlot: slot === 'start' ? 'goal' : 'start',
    } as Partial<SessionState>);
  }

  setActiveSlot(slot: Slot): void {
    this.commit({ activeSlot: slot });
  }

  /** Cell toggling is the only pattern editing the instrument offers. */
  toggleCell(slot: Slot, row: number, step: number, velocity = 0.9): void {
    const pattern = this.state[slot];
    if (!pattern) return;
    const grid = pattern.grid.map((r) => [...r]);
    grid[row]![step] = grid[row]![step]! > 0 ? 0 : velocity;
    // an edited grid is no longer the corpus pattern: drop its id
    this.commit({ [slot]: { genre: pattern.genre, grid } } as Partial<SessionState>);
  }

  setLength(length: number): void {
    this.commit({ length });
  }

  setMethod(method: InterpolationMethod): void {
    this.commit({ method });
  }

  setSwirlSteps(steps: number): void {
    this.commit({ swirlSteps: steps });
  }

  setResult(result: InterpolationResult | null): void {
    this.commit({ lastResult: result });
  }

  /** Request body for /api/interpolate, or the validation failure. */
  interpolateRequest():
    | { ok: true; body: { start: string | Pattern; goal: string | Pattern; length: number; method: InterpolationMethod } }
    | { ok: false; reason: string } {
    const { start, goal, length, method } = this.state;
    if (!start || !goal) {
      return { ok: false, reason: 'pick both a start and a goal pattern' };
    }
    const body = {
      start: start.id ?? start,
      goal: goal.id ?? goal,
      length,
      method,
    };
    const verdict: Verdict = validateInterpolateRequest(body);
    if (!verdict.ok) return { ok: false, reason: verdict.reason };
    return { ok: true, body };
  }

  swirlRequest():
    | { ok: true; body: { steps: number } }
    | { ok: false; reason: string } {
    const body = { steps: this.state.swirlSteps };
    const verdict = validateSwirlRequest(body);
    if (!verdict.ok) return { ok: false, reason: verdict.reason };
    return { ok: true, body };
  }
}

export function clonePattern(pattern: Pattern): Pattern {
  return {
    id: pattern.id,
    genre: pattern.genre,
    grid: pattern.grid.map((row) => [...row]) as Grid,
  };
}
