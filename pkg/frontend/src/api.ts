// Thin client for the repository service.
//
// Every entity response carries an ETag; the client remembers the last one
// seen per resource and replays it as If-Match on mutations. When another
// tab moved the resource forward the server answers 409 and the caller is
// expected to offer a reload, not to retry blindly.

import type {
  ErrorEnvelope,
  GraphPayload,
  Pattern,
  PatternLanguage,
  PatternView,
  Relation,
} from "./types";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly subject: string | null;

  constructor(status: number, code: string, message: string, subject: string | null) {
    super(message);
    this.status = status;
    this.code = code;
    this.subject = subject;
  }

  get isStale(): boolean {
    return this.status === 409 && this.code === "VersionConflict";
  }

  get isValidation(): boolean {
    return this.status === 422;
  }
}

export interface DrawRelationRequest {
  sourcePatternId: string;
  targetPatternId: string;
  type: string;
  description?: string;
}

type Fetcher = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly etags = new Map<string, string>();

  constructor(
    private readonly base: string = "",
    private readonly fetcher: Fetcher = (input, init) => fetch(input, init),
  ) {}

  etagFor(key: string): string | undefined {
    return this.etags.get(key);
  }

  /** Drop a remembered ETag, forcing the next mutation to re-fetch first. */
  forget(key: string): void {
    this.etags.delete(key);
  }

  private async request<T>(
    method: string,
    path: string,
    opts: { body?: unknown; ifMatch?: string; etagKey?: string } = {},
  ): Promise<T> {
    const headers: Record<string, string> = {};
    let body: string | undefined;
    if (opts.body !== undefined) {
      headers["Content-Type"] = "application/json";
      body = JSON.stringify(opts.body);
    }
    if (opts.ifMatch !== undefined) {
      headers["If-Match"] = opts.ifMatch;
    }
    let res: Response;
    try {
      res = await this.fetcher(this.base + path, { method, headers, body });
    } catch (err) {
      throw new ApiError(0, "ConnectionFailed", `cannot reach the server: ${err}`, null);
    }
    if (!res.ok) {
      throw await this.toError(res);
    }
    const etag = res.headers.get("ETag");
    if (etag && opts.etagKey) {
      this.etags.set(opts.etagKey, etag);
    }
    if (res.status === 204) {
      return undefined as T;
    }
    return (await res.json()) as T;
  }

  private async toError(res: Response): Promise<ApiError> {
    let envelope: ErrorEnvelope | null = null;
    try {
      envelope = (await res.json()) as ErrorEnvelope;
    } catch {
      // non-JSON error body; fall through to the generic message
    }
    if (envelope && envelope.error) {
      const e = envelope.error;
      return new ApiError(res.status, e.code, e.message, e.subject);
    }
    return new ApiError(res.status, "Unknown", `request failed with ${res.status}`, null);
  }

  listLanguages(): Promise<PatternLanguage[]> {
    return this.request("GET", "/pattern-languages");
  }

  listViews(): Promise<PatternView[]> {
    return this.request("GET", "/pattern-views");
  }

  getView(viewId: string): Promise<PatternView> {
    return this.request("GET", `/pattern-views/${viewId}`, { etagKey: `view:${viewId}` });
  }

  getViewGraph(viewId: string, seed: number): Promise<GraphPayload> {
    return this.request("GET", `/pattern-views/${viewId}/graph?layout=seed:${seed}`);
  }

  getPattern(ref: string): Promise<Pattern> {
    return this.request("GET", `/patterns/${ref}`);
  }

  listPatterns(languageId: string): Promise<Pattern[]> {
    return this.request("GET", `/pattern-languages/${languageId}/patterns`);
  }

  private viewEtag(viewId: string): string {
    const etag = this.etags.get(`view:${viewId}`);
    if (etag === undefined) {
      throw new ApiError(428, "MissingPrecondition", `view ${viewId} was never loaded`, viewId);
    }
    return etag;
  }

  async addMember(viewId: string, patternRef: string): Promise<PatternView> {
    return this.request("POST", `/pattern-views/${viewId}/patterns/${patternRef}`, {
      ifMatch: this.viewEtag(viewId),
      etagKey: `view:${viewId}`,
    });
  }

  async removeMember(
    viewId: string,
    patternRef: string,
    cascade = false,
  ): Promise<PatternView> {
    const query = cascade ? "?cascade=true" : "";
    return this.request("DELETE", `/pattern-views/${viewId}/patterns/${patternRef}${query}`, {
      ifMatch: this.viewEtag(viewId),
      etagKey: `view:${viewId}`,
    });
  }

  async drawRelation(viewId: string, req: DrawRelationRequest): Promise<Relation> {
    return this.request("POST", `/pattern-views/${viewId}/relations`, {
      body: req,
      ifMatch: this.viewEtag(viewId),
    });
  }
}
