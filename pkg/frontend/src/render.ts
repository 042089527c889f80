// DOM rendering from view models. Numbers on screen come straight from API
// fields; formatScore only rounds for display.

import { buildSearchView, formatScore } from './model';
import type { AppState } from './store';
import type { MatchRow } from './types';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderDbOptions(select: HTMLSelectElement, state: AppState): void {
  select.innerHTML = '';
  const names = state.dbs.map((d) => d.name);
  if (!names.includes(state.selectedDb)) names.unshift(state.selectedDb);
  for (const name of names) {
    const option = el('option', undefined, name);
    option.value = name;
    option.selected = name === state.selectedDb;
    select.appendChild(option);
  }
}

export function renderDbStats(container: HTMLElement, state: AppState): void {
  container.innerHTML = '';
  for (const db of state.dbs) {
    const card = el('div', 'db-card');
    card.appendChild(el('div', 'db-name', db.name));
    card.appendChild(
      el('div', 'db-meta', `${db.functions} functions · ${db.buckets} keys · p=${db.p}`),
    );
    container.appendChild(card);
  }
  if (state.lastIndexStats) {
    const s = state.lastIndexStats;
    const card = el('div', 'db-card indexed');
    card.appendChild(el('div', 'db-name', `indexed into ${s.db}`));
    card.appendChild(
      el('div', 'db-meta', `+${s.indexed} functions → ${s.functions} total, ${s.buckets} keys`),
    );
    container.appendChild(card);
  }
}

export function renderBanner(banner: HTMLElement, state: AppState): void {
  banner.textContent = state.error ?? state.notice ?? '';
  banner.className = state.error ? 'banner error' : state.notice ? 'banner notice' : 'banner';
}

export function renderDetail(pane: HTMLElement, row: MatchRow | null): void {
  pane.innerHTML = '';
  if (!row) {
    pane.classList.remove('open');
    return;
  }
  pane.classList.add('open');
  pane.appendChild(el('h3', undefined, row.name));
  const dl = el('dl');
  const add = (k: string, v: string) => {
    dl.appendChild(el('dt', undefined, k));
    dl.appendChild(el('dd', undefined, v));
  };
  add('source', row.source);
  add('architecture', row.arch ?? 'unknown');
  add('score', String(row.score));
  add('matched hashes', String(row.matched_hashes));
  add('function id', String(row.function_id));
  pane.appendChild(dl);
}

export function renderResults(
  container: HTMLElement,
  state: AppState,
  onRowClick: (row: MatchRow) => void,
): void {
  container.innerHTML = '';
  if (!state.search) return;
  const view = buildSearchView(state.search, state.filters);

  for (const group of view.matched) {
    const section = el('section', 'function-group');
    section.appendChild(el('h3', undefined, group.functionName));
    const table = el('table', 'matches');
    const head = el('tr');
    for (const col of ['match', 'score', 'source', 'arch']) {
      head.appendChild(el('th', undefined, col));
    }
    table.appendChild(head);
    for (const row of group.rows) {
      const tr = el('tr', 'match-row');
      tr.appendChild(el('td', 'match-name', row.name));
      const scoreCell = el('td', 'score', formatScore(row.score));
      scoreCell.dataset.raw = String(row.score);
      tr.appendChild(scoreCell);
      tr.appendChild(el('td', undefined, row.source));
      tr.appendChild(el('td', undefined, row.arch ?? '?'));
      tr.addEventListener('click', () => onRowClick(row));
      table.appendChild(tr);
    }
    section.appendChild(table);
    container.appendChild(section);
  }

  if (view.unknown.length > 0) {
    const section = el('section', 'unknown-group');
    section.appendChild(el('h3', undefined, 'unknown — prioritize for manual analysis'));
    const list = el('ul');
    for (const name of view.unknown) list.appendChild(el('li', undefined, name));
    section.appendChild(list);
    container.appendChild(section);
  }

  if (view.skipped.length > 0) {
    const section = el('section', 'skipped-group');
    section.appendChild(
      el('h3', undefined, 'skipped — empty after normalization'),
    );
    const list = el('ul');
    for (const name of view.skipped) list.appendChild(el('li', undefined, name));
    section.appendChild(list);
    container.appendChild(section);
  }
}
