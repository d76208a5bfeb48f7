/** Thin typed client for the fusion preview service.
 *
 * Every call goes through an injectable fetch so tests can run against
 * a recorded transport; error bodies' "detail" strings are surfaced
 * verbatim for the UI's banners.
 */

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ServiceError";
    this.status = status;
    this.detail = detail;
  }
}

export interface SessionHandle {
  session: string;
  state: string;
}

export interface SessionStatus {
  session: string;
  state: "pending" | "ready" | "error";
  stage?: string;
  error?: string;
  bands?: number;
  channels?: number;
  colorspace?: string;
  regions?: string[];
  times?: number[];
  mean1?: number[];
  mean2?: number[];
  height?: number;
  width?: number;
}

export interface SessionUpload {
  image1: Blob;
  image2: Blob;
  landmarks1?: Blob;
  landmarks2?: Blob;
  masks?: Array<{ name: string; data: Blob }>;
  variant?: string;
  bands?: number;
  colorspace?: string;
  featherRadius?: number;
}

async function raiseForStatus(res: Response): Promise<void> {
  if (res.ok) {
    return;
  }
  let detail = `${res.status} ${res.statusText}`;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") {
      detail = body.detail;
    }
  } catch {
    // non-JSON error body: keep the status line
  }
  throw new ServiceError(res.status, detail);
}

export class ServiceClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  async createSession(upload: SessionUpload): Promise<SessionHandle> {
    const form = new FormData();
    form.append("image1", upload.image1, "image1.png");
    form.append("image2", upload.image2, "image2.png");
    if (upload.landmarks1) {
      form.append("landmarks1", upload.landmarks1, "landmarks1.json");
    }
    if (upload.landmarks2) {
      form.append("landmarks2", upload.landmarks2, "landmarks2.json");
    }
    for (const mask of upload.masks ?? []) {
      form.append("masks", mask.data, mask.name);
    }
    if (upload.variant !== undefined) {
      form.append("variant", upload.variant);
    }
    if (upload.bands !== undefined) {
      form.append("bands", String(upload.bands));
    }
    if (upload.colorspace !== undefined) {
      form.append("colorspace", upload.colorspace);
    }
    if (upload.featherRadius !== undefined) {
      form.append("feather_radius", String(upload.featherRadius));
    }
    const res = await this.fetchImpl(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: form,
    });
    await raiseForStatus(res);
    return (await res.json()) as SessionHandle;
  }

  async status(sessionId: string): Promise<SessionStatus> {
    const res = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}`);
    await raiseForStatus(res);
    return (await res.json()) as SessionStatus;
  }

  /** Render a fused preview PNG for a serialized filter spec. */
  async preview(sessionId: string, specText: string, signal?: AbortSignal): Promise<Blob> {
    const res = await this.fetchImpl(`${this.baseUrl}/sessions/${sessionId}/preview`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ spec: specText }),
      signal,
    });
    await raiseForStatus(res);
    return await res.blob();
  }

  /** URL of one band image (16-bit offset-encoded PNG). */
  bandUrl(sessionId: string, image: 1 | 2, band: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/bands/${image}/${band}`;
  }
}
