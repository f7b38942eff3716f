// Grid rendering: velocity maps to cell opacity, one table per pattern.

import { Pattern } from './types';

export type CellHandler = (row: number, step: number) => void;

export function renderGrid(
  doc: Document,
  pattern: Pattern,
  options: { compact?: boolean; onCell?: CellHandler } = {},
): HTMLElement {
  const el = doc.createElement('div');
  el.className = options.compact ? 'grid grid-compact' : 'grid';
  el.setAttribute('data-rows', String(pattern.grid.length));
  pattern.grid.forEach((row, r) => {
    const rowEl = doc.createElement('div');
    rowEl.className = 'grid-row';
    row.forEach((velocity, s) => {
      const cell = doc.createElement('span');
      cell.className = 'cell' + (s % 16 === 0 ? ' bar-start' : '');
      cell.setAttribute('data-velocity', velocity.toFixed(3));
      if (velocity > 0) {
        cell.style.opacity = String(0.25 + 0.75 * velocity);
        cell.classList.add('hit');
      }
      if (options.onCell) {
        cell.addEventListener('click', () => options.onCell!(r, s));
      }
      rowEl.appendChild(cell);
    });
    el.appendChild(rowEl);
  });
  return el;
}

export function renderTimeline(
  doc: Document,
  patterns: Pattern[],
  container: HTMLElement,
): HTMLElement[] {
  container.textContent = '';
  return patterns.map((pattern, index) => {
    const wrap = doc.createElement('div');
    wrap.className = 'timeline-step';
    const label = doc.createElement('div');
    label.className = 'timeline-label';
    label.textContent = String(index);
    wrap.appendChild(label);
    wrap.appendChild(renderGrid(doc, pattern, { compact: true }));
    container.appendChild(wrap);
    return wrap;
  });
}

export function highlightStep(steps: HTMLElement[], index: number): void {
  steps.forEach((el, i) => el.classList.toggle('playing', i === index));
}
