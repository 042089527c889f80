// Shapes mirrored from the backend API; see docs/openapi.json in the repo root.

export interface MatchRow {
  name: string;
  source: string;
  arch: string | null;
  score: number;
  matched_hashes: number;
  function_id: number;
}

export interface FunctionResult {
  function: string;
  matches?: MatchRow[];
  skipped?: boolean;
}

export interface SearchResult {
  db: string;
  threshold: number;
  results: FunctionResult[];
}

export interface IndexResult {
  db: string;
  indexed: number;
  skipped: string[];
  functions: number;
  buckets: number;
}

export type JobState = 'queued' | 'running' | 'done' | 'failed';

export interface Job {
  job_id: string;
  kind: 'lift' | 'index' | 'search';
  state: JobState;
  result: SearchResult | IndexResult | null;
  error: string | null;
}

export interface DbInfo {
  name: string;
  functions: number;
  buckets: number;
  p: number;
  seed: number;
  window: number;
  size_on_disk: number | null;
}

export interface Health {
  status: string;
  loaded_dbs: string[];
  version: string;
}
