import { describe, expect, it } from 'vitest';

import { buildSearchView, defaultFilters, formatScore } from '../src/model';
import type { Job, SearchResult } from '../src/types';

import searchJob from './fixtures/search_job.json';
import noMatchJob from './fixtures/search_job_nomatch.json';

const searchResult = (searchJob as Job).result as SearchResult;
const noMatchResult = (noMatchJob as Job).result as SearchResult;

describe('buildSearchView', () => {
  it('passes every API score through unchanged', () => {
    const view = buildSearchView(searchResult, defaultFilters);
    const apiRows = searchResult.results.flatMap((r) => r.matches ?? []);
    const viewRows = view.matched.flatMap((g) => g.rows);
    expect(viewRows.length).toBe(apiRows.length);
    for (const [i, row] of viewRows.entries()) {
      expect(row.score).toBe(apiRows[i].score);
      expect(formatScore(row.score)).toBe(apiRows[i].score.toFixed(3));
    }
  });

  it('keeps the server ranking order', () => {
    const view = buildSearchView(searchResult, defaultFilters);
    for (const group of view.matched) {
      const api = searchResult.results.find((r) => r.function === group.functionName);
      expect(group.rows.map((r) => r.name)).toEqual((api!.matches ?? []).map((m) => m.name));
      const scores = group.rows.map((r) => r.score);
      const sorted = [...scores].sort((a, b) => b - a);
      expect(scores).toEqual(sorted);
    }
  });

  it('raising the score slider never grows the row count', () => {
    let previous = Infinity;
    for (let minScore = 0; minScore <= 1.0001; minScore += 0.1) {
      const view = buildSearchView(searchResult, { ...defaultFilters, minScore });
      expect(view.totalRows).toBeLessThanOrEqual(previous);
      previous = view.totalRows;
    }
  });

  it('raising the slider moves functions into the unknown group, never out', () => {
    let previousUnknown = -1;
    for (let minScore = 0; minScore <= 1.0001; minScore += 0.1) {
      const view = buildSearchView(searchResult, { ...defaultFilters, minScore });
      expect(view.unknown.length).toBeGreaterThanOrEqual(previousUnknown);
      previousUnknown = view.unknown.length;
    }
  });

  it('groups zero-match functions under unknown', () => {
    const view = buildSearchView(noMatchResult, defaultFilters);
    const zeroMatch = noMatchResult.results.filter((r) => !r.skipped && (r.matches ?? []).length === 0);
    for (const entry of zeroMatch) {
      expect(view.unknown).toContain(entry.function);
    }
    expect(view.unknown.length).toBeGreaterThan(0);
  });

  it('name filter keeps only substring matches', () => {
    const view = buildSearchView(searchResult, { ...defaultFilters, nameQuery: 'prga' });
    for (const group of view.matched) {
      for (const row of group.rows) {
        expect(row.name.toLowerCase()).toContain('prga');
      }
    }
  });

  it('sort-by-name is an explicit user action', () => {
    const ranked = buildSearchView(searchResult, defaultFilters);
    const byName = buildSearchView(searchResult, { ...defaultFilters, sortMode: 'name' });
    for (const group of byName.matched) {
      const names = group.rows.map((r) => r.name);
      expect(names).toEqual([...names].sort((a, b) => a.localeCompare(b)));
    }
    // same rows either way, only order may differ
    expect(byName.totalRows).toBe(ranked.totalRows);
  });

  it('formats scores to three decimals for display', () => {
    expect(formatScore(1)).toBe('1.000');
    expect(formatScore(0.65234375)).toBe('0.652');
    expect(formatScore(0.5)).toBe('0.500');
  });
});
