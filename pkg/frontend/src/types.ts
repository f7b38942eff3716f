// Wire types mirroring the service's JSON bodies.

export type Grid = number[][]; // 6 rows x 64 steps, velocities in [0, 1]

export type Pattern = {
  id?: string;
  genre?: string;
  grid: Grid;
};

export type PatternPage = {
  total: number;
  page: number;
  page_size: number;
  patterns: Pattern[];
};

export type InterpolationMethod =
  | 'lerp'
  | 'slerp'
  | 'crossfade_linear'
  | 'crossfade_equal_power';

export type InterpolateRequest = {
  start: string | Pattern;
  goal: string | Pattern;
  length: number;
  method: InterpolationMethod;
  velocity_floor?: number;
};

export type InterpolationResult = {
  method: InterpolationMethod;
  patterns: Pattern[];
  codes?: number[][];
};

export type SwirlRequest = {
  steps: number;
  omegas?: [number, number, number, number];
  velocity_floor?: number;
};

export type SwirlResult = {
  tempo_bpm: number;
  patterns: Pattern[];
  metadata: { steps: number; omegas: number[]; scale: number };
};

export type ApiErrorBody = { code: string; message: string };

export const N_INSTRUMENTS = 6;
export const N_STEPS = 64;
export const DEFAULT_TEMPO_BPM = 129;

export const INSTRUMENT_NAMES = [
  'bass drum',
  'snare drum',
  'closed hi-hat',
  'open hi-hat',
  'rimshot',
  'cowbell',
] as const;

export const GENRES = ['IDM', 'Electro', 'Techno', 'Generated'] as const;
