/** Payload shapes of the cellscout HTTP API, mirrored field for field. */

export interface DatasetSummary {
  dataset_id: string;
  name: string;
  cells: number;
  genes: number;
  trained: boolean;
}

export interface DatasetInfo extends DatasetSummary {
  cell_ids: string[];
  gene_names: string[];
  training_active: boolean;
  k?: number;
  informativeness?: number;
}

export interface RankedGene {
  gene: string;
  importance: number;
}

export interface AssociationSummary {
  index: number;
  color: string | null;
  annotation: string | null;
  top_genes: RankedGene[];
}

export interface EmbeddingPoint {
  cell_id: string;
  x: number;
  y: number;
  r: number;
  theta: number;
}

export interface EmbeddingResponse {
  source: "model" | "pca";
  points: EmbeddingPoint[];
}

export interface PureRegion {
  association_index: number;
  cell_indices: number[];
  centroid: [number, number];
}

export interface PureRegionsResponse {
  eps: number;
  min_pts: number;
  pure_regions: PureRegion[];
}

export interface RegionRecord {
  id: string;
  name: string;
  origin: string;
  cell_ids: string[];
}

export interface RelevanceProfile {
  region_id: string;
  mean_relevance: number[];
  rings: number[];
  q3: number;
}

export interface RadialHistogram {
  region_id: string;
  gene: string;
  bin_edges: number[];
  densities: number[];
}

export interface GenePredicate {
  gene: string;
  threshold: number;
  direction: "above" | "below";
  information_gain: number;
}

export interface VerificationRecord {
  genes: string[];
  positive_region: string;
  negative_region: string;
  order: number;
  result: {
    f1: number;
    accuracy: number;
    per_gene: GenePredicate[];
    confusion: { tp: number; fp: number; fn: number; tn: number };
  };
}

export interface JobStatus {
  job_id: string;
  state: "queued" | "running" | "done" | "failed";
  progress: { epoch: number; total: number };
  error: string | null;
}
