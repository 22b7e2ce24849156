/**
 * Typed client for the variant-studio REST API.
 *
 * Long generations return 202 with a poll URL; request helpers poll those
 * to completion so callers always get the final payload. The client holds
 * no state beyond the base URL — the server is the source of truth.
 */

export interface CandidateInfo {
  id: string;
  parent_id: string | null;
  beta: number | null;
  steps: number | null;
  sub_seed: number;
  image_url: string;
}

export interface LineageNode {
  id: string;
  parent_id: string | null;
  beta: number | null;
  steps: number | null;
  sub_seed: number;
  children: LineageNode[];
}

export interface Lineage {
  session_id: string;
  base_seed: number;
  checkpoint: string;
  node_count: number;
  root: LineageNode | null;
}

export interface ModelInfo {
  kind: string;
  dim: number;
  example_shape: number[];
  num_categories: number | null;
  checkpoint_digest: string;
  has_dataset: boolean;
}

export interface BranchParams {
  beta: number;
  steps: number;
  n: number;
  sub_seeds?: number[];
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

const sleep = (ms: number) => new Promise((r) => setTimeout(r, ms));

export class ApiClient {
  constructor(
    public baseUrl: string,
    private pollIntervalMs = 250,
    private pollTimeoutMs = 120_000,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      headers: { "Content-Type": "application/json" },
      ...init,
    });
    if (res.status === 202) {
      const body = await res.json();
      return this.poll<T>(body.poll_url);
    }
    if (!res.ok) {
      let detail = res.statusText;
      try {
        detail = (await res.json()).detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return res.json() as Promise<T>;
  }

  /** Poll a job URL until the result is ready. */
  private async poll<T>(pollUrl: string): Promise<T> {
    const deadline = Date.now() + this.pollTimeoutMs;
    for (;;) {
      const res = await fetch(this.baseUrl + pollUrl);
      if (res.status === 200) return res.json() as Promise<T>;
      if (res.status !== 202) {
        throw new ApiError(res.status, `job failed: ${res.statusText}`);
      }
      if (Date.now() > deadline) {
        throw new ApiError(408, "generation timed out");
      }
      await sleep(this.pollIntervalMs);
    }
  }

  model(): Promise<ModelInfo> {
    return this.request<ModelInfo>("/model");
  }

  createSession(source: {
    source: "upload" | "dataset-index" | "synthesize";
    image_base64?: string;
    index?: number;
    seed?: number;
  }): Promise<{ session_id: string; root_candidate: CandidateInfo }> {
    return this.request("/sessions", {
      method: "POST",
      body: JSON.stringify(source),
    });
  }

  async branch(
    sessionId: string,
    parentId: string,
    params: BranchParams,
  ): Promise<CandidateInfo[]> {
    const body = await this.request<{ candidates: CandidateInfo[] }>(
      `/sessions/${sessionId}/candidates`,
      {
        method: "POST",
        body: JSON.stringify({ parent_id: parentId, ...params }),
      },
    );
    return body.candidates;
  }

  inpaint(
    sessionId: string,
    candidateId: string,
    mask: { mask_base64?: string; mask?: number[] },
    subSeed?: number,
  ): Promise<CandidateInfo> {
    return this.request(`/sessions/${sessionId}/inpaint`, {
      method: "POST",
      body: JSON.stringify({
        candidate_id: candidateId,
        sub_seed: subSeed,
        ...mask,
      }),
    });
  }

  lineage(sessionId: string): Promise<Lineage> {
    return this.request(`/sessions/${sessionId}/lineage`);
  }

  imageUrl(candidateId: string): string {
    return `${this.baseUrl}/candidates/${candidateId}/image`;
  }

  async imageBytes(candidateId: string): Promise<Uint8Array> {
    const res = await fetch(this.imageUrl(candidateId));
    if (!res.ok) throw new ApiError(res.status, "image fetch failed");
    return new Uint8Array(await res.arrayBuffer());
  }
}
