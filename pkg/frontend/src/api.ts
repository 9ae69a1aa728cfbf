/** Typed client over the service API. Every UI mutation funnels through
 * exactly one method here; the UI itself computes nothing analytic. */

import type {
  AssociationSummary,
  DatasetInfo,
  DatasetSummary,
  EmbeddingResponse,
  JobStatus,
  PureRegionsResponse,
  RadialHistogram,
  RankedGene,
  RegionRecord,
  RelevanceProfile,
  VerificationRecord,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class CellscoutClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      let code = `http-${response.status}`;
      let message = response.statusText;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, message);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listDatasets(): Promise<DatasetSummary[]> {
    return this.request("/datasets");
  }

  datasetInfo(id: string): Promise<DatasetInfo> {
    return this.request(`/datasets/${id}`);
  }

  startTraining(id: string, config: Record<string, unknown>): Promise<{ job_id: string }> {
    return this.post(`/datasets/${id}/train`, config);
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.request(`/jobs/${jobId}`);
  }

  associations(id: string): Promise<AssociationSummary[]> {
    return this.request(`/datasets/${id}/associations`);
  }

  relevance(id: string, index: number): Promise<{ index: number; relevance: number[] }> {
    return this.request(`/datasets/${id}/associations/${index}/relevance`);
  }

  importance(id: string, index: number, full = false): Promise<{ index: number; genes: RankedGene[] }> {
    return this.request(`/datasets/${id}/associations/${index}/importance?full=${full}`);
  }

  patchAssociation(
    id: string,
    index: number,
    patch: { color?: string; annotation?: string },
  ): Promise<AssociationSummary> {
    return this.request(`/datasets/${id}/associations/${index}`, {
      method: "PATCH",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(patch),
    });
  }

  embedding(id: string, source: "model" | "pca" = "model"): Promise<EmbeddingResponse> {
    return this.request(`/datasets/${id}/embedding?source=${source}`);
  }

  pureRegions(id: string, minPts = 10): Promise<PureRegionsResponse> {
    return this.request(`/datasets/${id}/pure-regions?min_pts=${minPts}`);
  }

  listRegions(id: string): Promise<RegionRecord[]> {
    return this.request(`/datasets/${id}/regions`);
  }

  createRegion(id: string, name: string, cellIds: string[]): Promise<RegionRecord> {
    return this.post(`/datasets/${id}/regions`, { name, cell_ids: cellIds, origin: "lasso" });
  }

  deleteRegion(id: string, regionId: string): Promise<void> {
    return this.request(`/datasets/${id}/regions/${regionId}`, { method: "DELETE" });
  }

  regionProfile(id: string, regionId: string): Promise<RelevanceProfile> {
    return this.request(`/datasets/${id}/regions/${regionId}/profile`);
  }

  geneDistribution(
    id: string,
    regionId: string,
    gene: string,
    bins = 12,
  ): Promise<RadialHistogram> {
    return this.request(
      `/datasets/${id}/regions/${regionId}/genes/${encodeURIComponent(gene)}/distribution?bins=${bins}`,
    );
  }

  verify(
    id: string,
    genes: string[],
    positiveRegion: string,
    negativeRegion: string,
  ): Promise<VerificationRecord> {
    return this.post(`/datasets/${id}/verify`, {
      genes,
      positive_region: positiveRegion,
      negative_region: negativeRegion,
    });
  }

  verifications(id: string): Promise<VerificationRecord[]> {
    return this.request(`/datasets/${id}/verifications`);
  }
}
