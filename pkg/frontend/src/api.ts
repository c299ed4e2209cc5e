// Thin typed client for the HTTP API. All state changes in the UI go
// through this module; nothing here caches or post-processes results.

import type {
  CollectionCursor,
  DataType,
  IdentificationUnit,
  KnowledgeGraphDoc,
  LoginResponse,
  PaCandidate,
  PaJob,
  RepositoryRecord,
  SearchHit,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly resetAt: string | null = null,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  token: string | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let message = text || `HTTP ${response.status}`;
      let resetAt: string | null = null;
      try {
        const parsed = JSON.parse(text);
        message = parsed.error ?? parsed.detail ?? message;
        resetAt = parsed.reset_at ?? null;
      } catch {
        // non-JSON error body, keep raw text
      }
      throw new ApiError(response.status, String(message), resetAt);
    }
    return (text ? JSON.parse(text) : null) as T;
  }

  // -- auth -----------------------------------------------------------------

  async register(username: string, password: string): Promise<void> {
    await this.request("POST", "/api/auth/register", { username, password });
  }

  async login(username: string, password: string): Promise<LoginResponse> {
    const out = await this.request<LoginResponse>("POST", "/api/auth/login", {
      username,
      password,
    });
    this.token = out.token;
    return out;
  }

  async logout(): Promise<void> {
    await this.request("POST", "/api/auth/logout");
    this.token = null;
  }

  // -- repositories -----------------------------------------------------------

  listRepos(): Promise<RepositoryRecord[]> {
    return this.request("GET", "/api/repos");
  }

  addRepo(owner: string, name: string, offline = false): Promise<RepositoryRecord> {
    return this.request("POST", "/api/repos", { owner, name, offline });
  }

  deleteRepo(owner: string, name: string): Promise<{ purged: number }> {
    return this.request("DELETE", `/api/repos/${owner}/${name}`);
  }

  releaseDownloadUrl(owner: string, name: string, tag: string): string {
    return `${this.baseUrl}/api/repos/${owner}/${name}/releases/${encodeURIComponent(tag)}/download`;
  }

  // -- collection ----------------------------------------------------------------

  startCollect(owner: string, name: string, type: DataType, restart = false): Promise<CollectionCursor> {
    return this.request("POST", `/api/repos/${owner}/${name}/collect`, { type, restart });
  }

  collectStatus(owner: string, name: string, type: DataType): Promise<CollectionCursor> {
    return this.request("GET", `/api/repos/${owner}/${name}/collect/status?type=${type}`);
  }

  // -- SCA ---------------------------------------------------------------------------

  scaIdentify(owner: string, name: string, type: DataType, maskCode = false): Promise<IdentificationUnit[]> {
    return this.request(
      "GET",
      `/api/repos/${owner}/${name}/sca/identify?type=${type}&mask_code=${maskCode}`,
    );
  }

  scaExportUrl(owner: string, name: string, type: DataType): string {
    return `${this.baseUrl}/api/repos/${owner}/${name}/sca/export.csv?type=${type}`;
  }

  // -- PA -----------------------------------------------------------------------------

  paIdentify(repo: string, type: DataType): Promise<PaJob> {
    return this.request("POST", "/api/pa/identify", { repo, type });
  }

  job(id: number): Promise<PaJob> {
    return this.request("GET", `/api/jobs/${id}`);
  }

  candidates(repo: string, type?: DataType, status?: string): Promise<PaCandidate[]> {
    const params = new URLSearchParams({ repo });
    if (type) params.set("type", type);
    if (status) params.set("status", status);
    return this.request("GET", `/api/pa/candidates?${params}`);
  }

  confirm(candidateId: string): Promise<PaCandidate> {
    return this.request("POST", `/api/pa/${candidateId}/confirm`);
  }

  reject(candidateId: string): Promise<PaCandidate> {
    return this.request("POST", `/api/pa/${candidateId}/reject`);
  }

  paExportUrl(owner: string, name: string, type: DataType, status?: string): string {
    const suffix = status ? `&status=${status}` : "";
    return `${this.baseUrl}/api/repos/${owner}/${name}/pa/export.csv?type=${type}${suffix}`;
  }

  // -- search and graphs ------------------------------------------------------------------

  search(repo: string, type: DataType, q: string, scope?: string[]): Promise<{ hits: SearchHit[] }> {
    const params = new URLSearchParams({ repo, type, q });
    if (scope && scope.length) params.set("scope", scope.join(","));
    return this.request("GET", `/api/search?${params}`);
  }

  knowledgeGraph(
    owner: string,
    name: string,
    dimension: string,
    include?: string[],
  ): Promise<KnowledgeGraphDoc> {
    const params = new URLSearchParams({ dimension });
    if (include && include.length) params.set("include", include.join(","));
    return this.request("GET", `/api/repos/${owner}/${name}/kg?${params}`);
  }
}
