// Drum playback: simple synthesized percussion (no samples) and a
// lookahead transport that walks pattern sequences step by step.
//
// The transport is written against small player/clock interfaces so the
// scheduling logic is testable without an AudioContext.

import { Grid, Pattern } from './types';

export const STEPS_PER_PATTERN = 64;

export type HitPlayer = {
  play(row: number, velocity: number, when: number): void;
  now(): number;
};

export type Hit = {
  pattern: number;
  step: number;
  row: number;
  velocity: number;
  time: number;
};

/** Seconds per 1/16 step at a tempo. */
export function stepSeconds(tempoBpm: number): number {
  return 60 / tempoBpm / 4;
}

/** All hits of a pattern list laid out on a timeline starting at 0. */
export function layoutHits(patterns: Pattern[], tempoBpm: number): Hit[] {
  const dt = stepSeconds(tempoBpm);
  const hits: Hit[] = [];
  patterns.forEach((pattern, k) => {
    pattern.grid.forEach((row, r) => {
      row.forEach((velocity, s) => {
        if (velocity > 0) {
          hits.push({
            pattern: k,
            step: s,
            row: r,
            velocity,
            time: (k * STEPS_PER_PATTERN + s) * dt,
          });
        }
      });
    });
  });
  return hits;
}

export type TransportOptions = {
  lookaheadSeconds?: number;
  tickMs?: number;
  loop?: boolean;
  onPattern?: (index: number) => void;
  onStop?: () => void;
};

/**
 * Walks a sequence against the player clock, scheduling hits slightly
 * ahead of real time. stop() halts within one scheduler tick.
 */
export class Transport {
  private timer: ReturnType<typeof setInterval> | null = null;
  private hits: Hit[] = [];
  private cursor = 0;
  private startTime = 0;
  private totalSeconds = 0;
  private lastPattern = -1;

  constructor(
    private readonly player: HitPlayer,
    private readonly options: TransportOptions = {},
  ) {}

  get playing(): boolean {
    return this.timer !== null;
  }

  start(patterns: Pattern[], tempoBpm: number): void {
    this.stop();
    this.hits = layoutHits(patterns, tempoBpm);
    this.totalSeconds = patterns.length * STEPS_PER_PATTERN * stepSeconds(tempoBpm);
    this.cursor = 0;
    this.lastPattern = -1;
    this.startTime = this.player.now() + 0.06;
    const tick = () => this.scheduleWindow();
    this.timer = setInterval(tick, this.options.tickMs ?? 25);
    tick();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
      this.options.onStop?.();
    }
  }

  private scheduleWindow(): void {
    const horizon = this.player.now() + (this.options.lookaheadSeconds ?? 0.12);
    while (true) {
      if (this.cursor >= this.hits.length) {
        if (this.options.loop && this.hits.length > 0) {
          this.cursor = 0;
          this.startTime += this.totalSeconds;
        } else if (this.player.now() > this.startTime + this.totalSeconds) {
          this.stop();
          return;
        } else {
          return;
        }
      }
      const hit = this.hits[this.cursor]!;
      const when = this.startTime + hit.time;
      if (when > horizon) return;
      this.player.play(hit.row, hit.velocity, when);
      if (hit.pattern !== this.lastPattern) {
        this.lastPattern = hit.pattern;
        this.options.onPattern?.(hit.pattern);
      }
      this.cursor += 1;
    }
  }
}

/** WebAudio player: one tiny synthesized voice per instrument row. */
export class WebAudioPlayer implements HitPlayer {
  constructor(private readonly ctx: AudioContext) {}

  now(): number {
    return this.ctx.currentTime;
  }

  play(row: number, velocity: number, when: number): void {
    switch (row) {
      case 0: this.kick(velocity, when); break;
      case 1: this.snare(velocity, when); break;
      case 2: this.hat(velocity, when, 0.04); break;
      case 3: this.hat(velocity, when, 0.25); break;
      case 4: this.rimshot(velocity, when); break;
      default: this.cowbell(velocity, when); break;
    }
  }

  private envelope(when: number, seconds: number, peak: number): GainNode {
    const gain = this.ctx.createGain();
    gain.gain.setValueAtTime(peak, when);
    gain.gain.exponentialRampToValueAtTime(1e-4, when + seconds);
    gain.connect(this.ctx.destination);
    return gain;
  }

  private kick(velocity: number, when: number): void {
    const osc = this.ctx.createOscillator();
    osc.frequency.setValueAtTime(110, when);
    osc.frequency.exponentialRampToValueAtTime(45, when + 0.12);
    osc.connect(this.envelope(when, 0.25, velocity));
    osc.start(when);
    osc.stop(when + 0.25);
  }

  private noiseSource(seconds: number): AudioBufferSourceNode {
    const length = Math.max(1, Math.floor(this.ctx.sampleRate * seconds));
    const buffer = this.ctx.createBuffer(1, length, this.ctx.sampleRate);
    const data = buffer.getChannelData(0);
    for (let i = 0; i < length; i++) data[i] = Math.random() * 2 - 1;
    const src = this.ctx.createBufferSource();
    src.buffer = buffer;
    return src;
  }

  private snare(velocity: number, when: number): void {
    const noise = this.noiseSource(0.2);
    const filter = this.ctx.createBiquadFilter();
    filter.type = 'bandpass';
    filter.frequency.value = 1800;
    noise.connect(filter);
    filter.connect(this.envelope(when, 0.18, velocity * 0.8));
    noise.start(when);
    const tone = this.ctx.createOscillator();
    tone.frequency.value = 180;
    tone.connect(this.envelope(when, 0.12, velocity * 0.4));
    tone.start(when);
    tone.stop(when + 0.12);
  }

  private hat(velocity: number, when: number, seconds: number): void {
    const noise = this.noiseSource(seconds);
    const filter = this.ctx.createBiquadFilter();
    filter.type = 'highpass';
    filter.frequency.value = 7000;
    noise.connect(filter);
    filter.connect(this.envelope(when, seconds, velocity * 0.5));
    noise.start(when);
  }

  private rimshot(velocity: number, when: number): void {
    const noise = this.noiseSource(0.05);
    const filter = this.ctx.createBiquadFilter();
    filter.type = 'bandpass';
    filter.frequency.value = 3500;
    filter.Q.value = 6;
    noise.connect(filter);
    filter.connect(this.envelope(when, 0.05, velocity * 0.9));
    noise.start(when);
  }

  private cowbell(velocity: number, when: number): void {
    for (const freq of [540, 800]) {
      const osc = this.ctx.createOscillator();
      osc.type = 'square';
      osc.frequency.value = freq;
      osc.connect(this.envelope(when, 0.18, velocity * 0.25));
      osc.start(when);
      osc.stop(when + 0.18);
    }
  }
}
