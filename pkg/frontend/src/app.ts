import './style.css';

import { ApiError, fetchDbs, submitIndex, submitSearch, waitForJob } from './api';
import { renderBanner, renderDbOptions, renderDbStats, renderDetail, renderResults } from './render';
import { Store } from './store';
import type { IndexResult, MatchRow, SearchResult } from './types';

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startApp(): Store {
  const store = new Store();

  const fileInput = byId<HTMLInputElement>('file-input');
  const dbSelect = byId<HTMLSelectElement>('db-select');
  const thresholdInput = byId<HTMLInputElement>('threshold');
  const thresholdLabel = byId<HTMLSpanElement>('threshold-label');
  const minScoreInput = byId<HTMLInputElement>('min-score');
  const minScoreLabel = byId<HTMLSpanElement>('min-score-label');
  const nameFilter = byId<HTMLInputElement>('name-filter');
  const sortSelect = byId<HTMLSelectElement>('sort-mode');
  const tokenInput = byId<HTMLInputElement>('write-token');
  const searchButton = byId<HTMLButtonElement>('search-button');
  const indexButton = byId<HTMLButtonElement>('index-button');
  const banner = byId<HTMLDivElement>('banner');
  const results = byId<HTMLDivElement>('results');
  const dbStats = byId<HTMLDivElement>('db-stats');
  const detailPane = byId<HTMLDivElement>('detail');

  const showRow = (row: MatchRow) => store.update({ detail: row });

  store.subscribe((state) => {
    renderDbOptions(dbSelect, state);
    renderDbStats(dbStats, state);
    renderBanner(banner, state);
    renderResults(results, state, showRow);
    renderDetail(detailPane, state.detail);
    thresholdLabel.textContent = state.threshold.toFixed(2);
    minScoreLabel.textContent = state.filters.minScore.toFixed(2);
    searchButton.disabled = state.busy;
    indexButton.disabled = state.busy;
  });

  const refreshDbs = async () => {
    try {
      store.update({ dbs: await fetchDbs() });
    } catch (err) {
      store.update({ error: String(err) });
    }
  };

  dbSelect.addEventListener('change', () => store.update({ selectedDb: dbSelect.value }));
  thresholdInput.addEventListener('input', () =>
    store.update({ threshold: Number(thresholdInput.value) }),
  );
  minScoreInput.addEventListener('input', () =>
    store.update({ filters: { ...store.get().filters, minScore: Number(minScoreInput.value) } }),
  );
  nameFilter.addEventListener('input', () =>
    store.update({ filters: { ...store.get().filters, nameQuery: nameFilter.value } }),
  );
  sortSelect.addEventListener('change', () =>
    store.update({
      filters: { ...store.get().filters, sortMode: sortSelect.value === 'name' ? 'name' : 'rank' },
    }),
  );

  const pickedFile = (): File | null => fileInput.files?.[0] ?? null;

  searchButton.addEventListener('click', async () => {
    const file = pickedFile();
    if (!file) {
      store.update({ error: 'pick a binary or .ll file first', notice: null });
      return;
    }
    const { selectedDb, threshold } = store.get();
    store.update({ busy: true, error: null, notice: `searching ${file.name}…`, detail: null });
    try {
      const job = await waitForJob(await submitSearch(file, selectedDb, threshold));
      if (job.state === 'failed') {
        store.update({ busy: false, error: job.error ?? 'search failed', notice: null });
        return;
      }
      store.update({
        busy: false,
        notice: null,
        search: job.result as SearchResult,
      });
    } catch (err) {
      store.update({ busy: false, error: String(err), notice: null });
    }
  });

  indexButton.addEventListener('click', async () => {
    const file = pickedFile();
    if (!file) {
      store.update({ error: 'pick a binary or .ll file first', notice: null });
      return;
    }
    const { selectedDb } = store.get();
    const token = tokenInput.value || undefined;
    store.update({ busy: true, error: null, notice: `indexing ${file.name}…` });
    try {
      const job = await waitForJob(await submitIndex(file, selectedDb, token));
      if (job.state === 'failed') {
        store.update({ busy: false, error: job.error ?? 'index failed', notice: null });
        return;
      }
      const result = job.result as IndexResult;
      store.update({
        busy: false,
        notice: `indexed ${result.indexed} functions into ${result.db}`,
        lastIndexStats: {
          db: result.db,
          indexed: result.indexed,
          functions: result.functions,
          buckets: result.buckets,
        },
      });
      await refreshDbs();
    } catch (err) {
      if (err instanceof ApiError && err.status === 403) {
        store.update({ busy: false, error: null, notice: `read-only: ${err.detail}` });
        return;
      }
      store.update({ busy: false, error: String(err), notice: null });
    }
  });

  void refreshDbs();
  return store;
}

if (typeof document !== 'undefined' && document.getElementById('file-input')) {
  startApp();
}
