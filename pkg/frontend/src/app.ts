// Application wiring: browser panel, transition panel, swirl panel.
//
// Everything renders into a root element from injected dependencies
// (document, API client, hit player), so the full flow runs under jsdom
// with a fake player in tests and under a real browser in production.

import { ApiClient, ApiError, StaleResponseError } from './api';
import { HitPlayer, Transport } from './audio';
import { highlightStep, renderGrid, renderTimeline } from './grid';
import { Session, Slot } from './state';
import { GENRES, InterpolationMethod, Pattern } from './types';

export type AppDeps = {
  doc: Document;
  api: ApiClient;
  player: HitPlayer;
};

export class App {
  readonly session = new Session();
  private readonly doc: Document;
  private readonly api: ApiClient;
  private transport: Transport;
  private swirlTransport: Transport;

  // DOM handles the tests poke at
  banner!: HTMLElement;
  browserList!: HTMLElement;
  genreSelect!: HTMLSelectElement;
  startSlot!: HTMLElement;
  goalSlot!: HTMLElement;
  lengthInput!: HTMLInputElement;
  methodSelect!: HTMLSelectElement;
  runButton!: HTMLButtonElement;
  playButton!: HTMLButtonElement;
  stopButton!: HTMLButtonElement;
  downloadButton!: HTMLButtonElement;
  timeline!: HTMLElement;
  errorBox!: HTMLElement;
  swirlSteps!: HTMLInputElement;
  swirlRun!: HTMLButtonElement;
  swirlStop!: HTMLButtonElement;
  swirlTimeline!: HTMLElement;

  private timelineSteps: HTMLElement[] = [];
  private swirlSeq: Pattern[] = [];
  private swirlStepsEls: HTMLElement[] = [];
  lastDownload: Blob | null = null;

  constructor(private readonly deps: AppDeps) {
    this.doc = deps.doc;
    this.api = deps.api;
    this.transport = new Transport(deps.player, {
      onPattern: (i) => highlightStep(this.timelineSteps, i),
      onStop: () => highlightStep(this.timelineSteps, -1),
    });
    this.swirlTransport = new Transport(deps.player, {
      loop: true,
      onPattern: (i) => highlightStep(this.swirlStepsEls, i),
    });
  }

  mount(root: HTMLElement): void {
    root.textContent = '';
    root.appendChild(this.buildBanner());
    root.appendChild(this.buildBrowser());
    root.appendChild(this.buildTransitionPanel());
    root.appendChild(this.buildSwirlPanel());
    this.session.subscribe(() => this.renderSlots());
    void this.refreshStatus();
    void this.loadPatterns();
  }

  // --- service status ---------------------------------------------------

  private buildBanner(): HTMLElement {
    this.banner = this.doc.createElement('div');
    this.banner.className = 'banner hidden';
    const label = this.doc.createElement('span');
    label.textContent = 'service unreachable';
    const retry = this.doc.createElement('button');
    retry.textContent = 'retry';
    retry.addEventListener('click', () => {
      void this.refreshStatus().then((ok) => {
        if (ok) void this.loadPatterns();
      });
    });
    this.banner.append(label, retry);
    return this.banner;
  }

  async refreshStatus(): Promise<boolean> {
    const ok = await this.api.ping();
    this.banner.classList.toggle('hidden', ok);
    return ok;
  }

  // --- pattern browser ----------------------------------------------------

  private buildBrowser(): HTMLElement {
    const panel = this.doc.createElement('section');
    panel.className = 'panel browser';
    const title = this.doc.createElement('h2');
    title.textContent = 'patterns';
    this.genreSelect = this.doc.createElement('select');
    for (const genre of ['all', ...GENRES]) {
      const option = this.doc.createElement('option');
      option.value = genre;
      option.textContent = genre;
      this.genreSelect.appendChild(option);
    }
    this.genreSelect.addEventListener('change', () => void this.loadPatterns());
    this.browserList = this.doc.createElement('div');
    this.browserList.className = 'browser-list';
    panel.append(title, this.genreSelect, this.browserList);
    return panel;
  }

  async loadPatterns(): Promise<void> {
    const genre = this.genreSelect.value;
    try {
      const page = await this.api.listPatterns(
        genre === 'all' || !genre ? undefined : genre);
      this.browserList.textContent = '';
      for (const pattern of page.patterns) {
        this.browserList.appendChild(this.patternCard(pattern));
      }
    } catch (err) {
      this.showError(err);
    }
  }

  private patternCard(pattern: Pattern): HTMLElement {
    const card = this.doc.createElement('div');
    card.className = 'pattern-card';
    card.setAttribute('data-id', pattern.id ?? '');
    card.setAttribute('data-genre', pattern.genre ?? '');
    const header = this.doc.createElement('div');
    header.className = 'pattern-card-header';
    header.textContent = `${pattern.id ?? '?'} · ${pattern.genre ?? '?'}`;
    card.appendChild(header);
    card.appendChild(renderGrid(this.doc, pattern, { compact: true }));
    card.addEventListener('click', () => this.session.pick(pattern));
    return card;
  }

  // --- transition panel ----------------------------------------------------

  private buildTransitionPanel(): HTMLElement {
    const panel = this.doc.createElement('section');
    panel.className = 'panel transition';
    const title = this.doc.createElement('h2');
    title.textContent = 'transition';

    this.startSlot = this.slotBox('start');
    this.goalSlot = this.slotBox('goal');

    this.lengthInput = this.doc.createElement('input');
    this.lengthInput.type = 'number';
    this.lengthInput.min = '1';
    this.lengthInput.max = '256';
    this.lengthInput.value = String(this.session.current.length);
    this.lengthInput.addEventListener('change', () => {
      this.session.setLength(Number(this.lengthInput.value));
    });

    this.methodSelect = this.doc.createElement('select');
    for (const method of ['slerp', 'lerp', 'crossfade_linear', 'crossfade_equal_power']) {
      const option = this.doc.createElement('option');
      option.value = method;
      option.textContent = method;
      this.methodSelect.appendChild(option);
    }
    this.methodSelect.addEventListener('change', () => {
      this.session.setMethod(this.methodSelect.value as InterpolationMethod);
      if (this.session.current.lastResult) void this.runInterpolation();
    });

    this.runButton = this.doc.createElement('button');
    this.runButton.textContent = 'run';
    this.runButton.addEventListener('click', () => void this.runInterpolation());
    this.playButton = this.doc.createElement('button');
    this.playButton.textContent = 'play';
    this.playButton.addEventListener('click', () => this.play());
    this.stopButton = this.doc.createElement('button');
    this.stopButton.textContent = 'stop';
    this.stopButton.addEventListener('click', () => this.transport.stop());
    this.downloadButton = this.doc.createElement('button');
    this.downloadButton.textContent = 'download MIDI';
    this.downloadButton.addEventListener('click', () => void this.download());

    this.errorBox = this.doc.createElement('div');
    this.errorBox.className = 'error hidden';
    this.timeline = this.doc.createElement('div');
    this.timeline.className = 'timeline';

    panel.append(title, this.startSlot, this.goalSlot, this.lengthInput,
                 this.methodSelect, this.runButton, this.playButton,
                 this.stopButton, this.downloadButton, this.errorBox,
                 this.timeline);
    return panel;
  }

  private slotBox(slot: Slot): HTMLElement {
    const box = this.doc.createElement('div');
    box.className = `slot slot-${slot}`;
    box.addEventListener('click', () => this.session.setActiveSlot(slot));
    return box;
  }

  private renderSlots(): void {
    const { start, goal, activeSlot } = this.session.current;
    for (const [slot, pattern, el] of [
      ['start', start, this.startSlot],
      ['goal', goal, this.goalSlot],
    ] as const) {
      el.textContent = '';
      const label = this.doc.createElement('div');
      label.className = 'slot-label';
      label.textContent = `${slot}: ${pattern?.id ?? (pattern ? 'edited' : 'pick a pattern')}`;
      el.appendChild(label);
      el.classList.toggle('active', activeSlot === slot);
      if (pattern) {
        el.appendChild(renderGrid(this.doc, pattern, {
          onCell: (row, step) => this.session.toggleCell(slot, row, step),
        }));
      }
    }
  }

  async runInterpolation(): Promise<void> {
    const request = this.session.interpolateRequest();
    if (!request.ok) {
      this.showError(new Error(request.reason));
      return;
    }
    this.clearError();
    try {
      const result = await this.api.interpolate(request.body);
      this.session.setResult(result);
      this.timelineSteps = renderTimeline(this.doc, result.patterns, this.timeline);
    } catch (err) {
      if (err instanceof StaleResponseError) return;
      this.showError(err);
    }
  }

  play(): void {
    const result = this.session.current.lastResult;
    if (!result) return;
    this.transport.start(result.patterns, this.session.current.tempoBpm);
  }

  async download(): Promise<void> {
    const result = this.session.current.lastResult;
    if (!result) {
      this.showError(new Error('run an interpolation first'));
      return;
    }
    try {
      const blob = await this.api.exportMidi(
        result.patterns, this.session.current.tempoBpm);
      this.lastDownload = blob;
      this.offerDownload(blob, 'transition.mid');
    } catch (err) {
      this.showError(err);
    }
  }

  private offerDownload(blob: Blob, name: string): void {
    const url = (this.doc.defaultView ?? window).URL?.createObjectURL?.(blob);
    if (!url) return; // test environment without object URLs
    const a = this.doc.createElement('a');
    a.href = url;
    a.download = name;
    a.click();
    (this.doc.defaultView ?? window).URL.revokeObjectURL(url);
  }

  // --- swirl panel ---------------------------------------------------------

  private buildSwirlPanel(): HTMLElement {
    const panel = this.doc.createElement('section');
    panel.className = 'panel swirl';
    const title = this.doc.createElement('h2');
    title.textContent = 'autonomous drummer';
    this.swirlSteps = this.doc.createElement('input');
    this.swirlSteps.type = 'range';
    this.swirlSteps.min = '2';
    this.swirlSteps.max = '124';
    this.swirlSteps.value = String(this.session.current.swirlSteps);
    this.swirlSteps.addEventListener('change', () => {
      this.session.setSwirlSteps(Number(this.swirlSteps.value));
      if (this.swirlTransport.playing) void this.runSwirl();
    });
    this.swirlRun = this.doc.createElement('button');
    this.swirlRun.textContent = 'start';
    this.swirlRun.addEventListener('click', () => void this.runSwirl());
    this.swirlStop = this.doc.createElement('button');
    this.swirlStop.textContent = 'stop';
    this.swirlStop.addEventListener('click', () => this.swirlTransport.stop());
    this.swirlTimeline = this.doc.createElement('div');
    this.swirlTimeline.className = 'timeline';
    panel.append(title, this.swirlSteps, this.swirlRun, this.swirlStop,
                 this.swirlTimeline);
    return panel;
  }

  async runSwirl(): Promise<void> {
    const request = this.session.swirlRequest();
    if (!request.ok) {
      this.showError(new Error(request.reason));
      return;
    }
    this.clearError();
    try {
      const result = await this.api.swirl(request.body);
      this.swirlSeq = result.patterns;
      this.swirlStepsEls = renderTimeline(this.doc, this.swirlSeq, this.swirlTimeline);
      this.swirlTransport.start(this.swirlSeq, result.tempo_bpm);
    } catch (err) {
      if (err instanceof StaleResponseError) return;
      this.showError(err);
    }
  }

  // --- errors ----------------------------------------------------------------

  private showError(err: unknown): void {
    const message = err instanceof ApiError
      ? `${err.status} ${err.code}: ${err.message}`
      : String(err instanceof Error ? err.message : err);
    this.errorBox.textContent = message;
    this.errorBox.classList.remove('hidden');
  }

  private clearError(): void {
    this.errorBox.textContent = '';
    this.errorBox.classList.add('hidden');
  }
}
