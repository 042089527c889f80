// Pure view-model builders. The UI performs no similarity math: every score
// shown is an API value passed through unchanged (rendering rounds to three
// decimals, the raw value stays on the row).

import type { MatchRow, SearchResult } from './types';

export type SortMode = 'rank' | 'name';

export interface Filters {
  minScore: number;
  nameQuery: string;
  sortMode: SortMode;
}

export const defaultFilters: Filters = { minScore: 0, nameQuery: '', sortMode: 'rank' };

export interface MatchedGroup {
  functionName: string;
  rows: MatchRow[];
}

export interface SearchView {
  matched: MatchedGroup[];
  /** zero-match functions: prioritize these for manual analysis */
  unknown: string[];
  skipped: string[];
  totalRows: number;
}

export function formatScore(score: number): string {
  return score.toFixed(3);
}

export function buildSearchView(result: SearchResult, filters: Filters): SearchView {
  const matched: MatchedGroup[] = [];
  const unknown: string[] = [];
  const skipped: string[] = [];
  const query = filters.nameQuery.trim().toLowerCase();
  let totalRows = 0;

  for (const entry of result.results) {
    if (entry.skipped) {
      skipped.push(entry.function);
      continue;
    }
    // API order is ranking order; never re-sorted unless the user asks
    let rows = (entry.matches ?? []).filter((m) => m.score >= filters.minScore);
    if (query) {
      rows = rows.filter((m) => m.name.toLowerCase().includes(query));
    }
    if (filters.sortMode === 'name') {
      rows = [...rows].sort((a, b) => a.name.localeCompare(b.name));
    }
    if (rows.length === 0) {
      unknown.push(entry.function);
    } else {
      matched.push({ functionName: entry.function, rows });
      totalRows += rows.length;
    }
  }
  return { matched, unknown, skipped, totalRows };
}
