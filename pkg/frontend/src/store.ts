// Minimal store: all UI state changes funnel through update(), listeners
// re-render from the new snapshot. No client-side persistence.

import { defaultFilters, type Filters } from './model';
import type { DbInfo, MatchRow, SearchResult } from './types';

export interface AppState {
  dbs: DbInfo[];
  selectedDb: string;
  threshold: number;
  writeToken: string;
  busy: boolean;
  error: string | null;
  notice: string | null;
  search: SearchResult | null;
  filters: Filters;
  detail: MatchRow | null;
  lastIndexStats: { db: string; indexed: number; functions: number; buckets: number } | null;
}

export const initialState: AppState = {
  dbs: [],
  selectedDb: 'default',
  threshold: 0.5,
  writeToken: '',
  busy: false,
  error: null,
  notice: null,
  search: null,
  filters: { ...defaultFilters },
  detail: null,
  lastIndexStats: null,
};

type Listener = (state: AppState) => void;

export class Store {
  private state: AppState;
  private listeners: Listener[] = [];

  constructor(state: AppState = initialState) {
    this.state = { ...state };
  }

  get(): AppState {
    return this.state;
  }

  update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}
