import type { DbInfo, Health, Job } from './types';

export class ApiError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

async function errorOf(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.detail === 'string') detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export async function fetchHealth(): Promise<Health> {
  const r = await fetch('/healthz');
  if (!r.ok) throw await errorOf(r);
  return r.json();
}

export async function fetchDbs(): Promise<DbInfo[]> {
  const r = await fetch('/api/v1/dbs');
  if (!r.ok) throw await errorOf(r);
  return r.json();
}

export async function submitSearch(
  file: File,
  db: string,
  threshold: number,
  top = 50,
): Promise<Job> {
  const form = new FormData();
  form.append('file', file);
  form.append('db', db);
  form.append('threshold', String(threshold));
  form.append('top', String(top));
  const r = await fetch('/api/v1/search', { method: 'POST', body: form });
  if (!r.ok) throw await errorOf(r);
  return r.json();
}

export async function submitIndex(file: File, db: string, token?: string): Promise<Job> {
  const form = new FormData();
  form.append('file', file);
  form.append('db', db);
  const headers: Record<string, string> = {};
  if (token) headers['Authorization'] = `Bearer ${token}`;
  const r = await fetch('/api/v1/index', { method: 'POST', body: form, headers });
  if (!r.ok) throw await errorOf(r);
  return r.json();
}

export async function fetchJob(jobId: string): Promise<Job> {
  const r = await fetch(`/api/v1/jobs/${jobId}`);
  if (!r.ok) throw await errorOf(r);
  return r.json();
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/** Poll a job with backoff until it reaches a terminal state. */
export async function waitForJob(
  job: Job,
  opts: { initialDelayMs?: number; maxDelayMs?: number; timeoutMs?: number } = {},
): Promise<Job> {
  const initial = opts.initialDelayMs ?? 300;
  const max = opts.maxDelayMs ?? 3000;
  const timeout = opts.timeoutMs ?? 120000;
  let current = job;
  let delay = initial;
  const deadline = Date.now() + timeout;
  while (current.state !== 'done' && current.state !== 'failed') {
    if (Date.now() > deadline) {
      throw new ApiError(0, `job ${current.job_id} timed out`);
    }
    await sleep(delay);
    delay = Math.min(delay * 1.5, max);
    current = await fetchJob(current.job_id);
  }
  return current;
}
