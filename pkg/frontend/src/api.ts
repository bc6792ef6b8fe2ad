/** Thin fetch client for the v1 service API. All state changes go through
 * the annotation endpoint; nothing here touches files or caches results. */

import type { DashboardPayload, ItemPayload, ProjectSummary, QueuePage, Role } from './types.js';

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** Network-level failure (service unreachable), distinct from a rejection. */
export class OfflineError extends Error {}

export interface QueueQuery {
  status?: string;
  feature?: string;
  page?: number;
  page_size?: number;
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    readonly projectId: string,
    readonly role: Role,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}${path}`, init);
    } catch (err) {
      throw new OfflineError(String(err));
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  async projects(): Promise<ProjectSummary[]> {
    return this.request<ProjectSummary[]>('/v1/projects');
  }

  async queue(query: QueueQuery = {}): Promise<QueuePage> {
    const params = new URLSearchParams({ role: this.role });
    if (query.status) params.set('status', query.status);
    if (query.feature) params.set('feature', query.feature);
    if (query.page) params.set('page', String(query.page));
    if (query.page_size) params.set('page_size', String(query.page_size));
    return this.request<QueuePage>(`/v1/projects/${this.projectId}/queue?${params}`);
  }

  async item(itemId: string): Promise<ItemPayload> {
    const params = new URLSearchParams({ role: this.role });
    return this.request<ItemPayload>(
      `/v1/projects/${this.projectId}/items/${encodeURIComponent(itemId)}?${params}`,
    );
  }

  async annotate(itemId: string, label: string, idempotencyKey: string): Promise<ItemPayload> {
    return this.request<ItemPayload>(
      `/v1/projects/${this.projectId}/items/${encodeURIComponent(itemId)}/annotation`,
      {
        method: 'POST',
        headers: {
          'Content-Type': 'application/json',
          'Idempotency-Key': idempotencyKey,
        },
        body: JSON.stringify({ role: this.role, label }),
      },
    );
  }

  async dashboard(): Promise<DashboardPayload> {
    return this.request<DashboardPayload>(`/v1/projects/${this.projectId}/dashboard`);
  }
}

let keyCounter = 0;

/** Unique idempotency key per decision; replaying a retry is then safe. */
export function freshIdempotencyKey(role: string): string {
  keyCounter += 1;
  const rand =
    typeof crypto !== 'undefined' && 'randomUUID' in crypto
      ? crypto.randomUUID()
      : Math.random().toString(36).slice(2);
  return `${role}-${Date.now()}-${keyCounter}-${rand}`;
}
