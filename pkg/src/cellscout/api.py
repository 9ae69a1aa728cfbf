"""HTTP service over the dataset store.

Every endpoint returns JSON with field names matching the domain types;
domain failures surface as 422 with a machine-readable ``code``, unknown
ids as 404, upload parse failures as 400, and concurrent training as 409.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .analytics import (
    detect_pure_regions,
    dominant_labels,
    gene_distribution,
    relevance_profile,
    top_genes,
)
from .embedding import embed_with_model, embed_with_pca
from .errors import CellScoutError, NotFound, TrainingInProgress, UnknownGene
from .data import load_matrix
from .miner import MinerConfig, compute_delta
from .store import DatasetHandle, DatasetStore
from .verification import evaluate_biomarker


class TrainRequest(BaseModel):
    k: int = 8
    epochs: int = 300
    seed: int = 0
    lam: float | None = None
    gamma: float = 0.1
    beta: float = 1.0
    learning_rate: float = 0.1
    batch_size: int = 256
    temperature_start: float = 1.0
    temperature_end: float = 0.1
    genes_per_expert: int = 32
    latent_dim: int = 16
    bins: int = 16

    def to_config(self) -> MinerConfig:
        return MinerConfig(**self.model_dump())


class RegionRequest(BaseModel):
    name: str
    cell_ids: list[str]
    origin: str = "lasso"


class VerifyRequest(BaseModel):
    genes: list[str]
    positive_region: str
    negative_region: str


class AssociationPatch(BaseModel):
    color: str | None = None
    annotation: str | None = None


def _association_summary(handle: DatasetHandle, index: int, n_top: int = 4) -> dict:
    trained = handle.require_trained()
    assoc = trained.associations[index]
    ranked = top_genes(assoc, handle.raw.gene_names, n_top=n_top)
    return {
        "index": index,
        "color": handle.colors.get(index),
        "annotation": handle.annotations.get(index),
        "top_genes": [{"gene": g, "importance": imp} for g, imp in ranked],
    }


def create_app(store: DatasetStore, ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="cellscout", version="0.1.0")
    app.state.store = store
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(CellScoutError)
    async def domain_error_handler(_request: Request, exc: CellScoutError):
        status = 404 if isinstance(exc, NotFound) else 422
        if isinstance(exc, TrainingInProgress):
            status = 409
        return JSONResponse(status_code=status, content={"code": exc.code, "message": str(exc)})

    # -- datasets ---------------------------------------------------------------

    @app.post("/datasets", status_code=201)
    async def upload_dataset(file: UploadFile):
        payload = await file.read()
        suffix = ".tsv" if (file.filename or "").endswith(".tsv") else ".csv"
        fmt = "tsv" if suffix == ".tsv" else "csv"
        try:
            with tempfile.NamedTemporaryFile(suffix=suffix, delete=False) as tmp:
                tmp.write(payload)
                tmp_path = Path(tmp.name)
            try:
                matrix = load_matrix(tmp_path, format=fmt)
            finally:
                tmp_path.unlink(missing_ok=True)
        except CellScoutError as exc:
            return JSONResponse(
                status_code=400, content={"code": exc.code, "message": str(exc)}
            )
        name = Path(file.filename or "dataset").stem
        handle = store.create_dataset(matrix, name)
        return {"dataset_id": handle.id}

    @app.get("/datasets")
    def list_datasets():
        return [
            {
                "dataset_id": h.id,
                "name": h.name,
                "cells": h.raw.m,
                "genes": h.raw.n,
                "trained": h.trained is not None,
            }
            for h in store.datasets.values()
        ]

    @app.get("/datasets/{dataset_id}")
    def dataset_info(dataset_id: str):
        h = store.get(dataset_id)
        info = {
            "dataset_id": h.id,
            "name": h.name,
            "cells": h.raw.m,
            "genes": h.raw.n,
            "cell_ids": h.raw.cell_ids,
            "gene_names": h.raw.gene_names,
            "trained": h.trained is not None,
            "training_active": h.training_active,
        }
        if h.trained is not None:
            info["k"] = h.trained.config.k
            info["informativeness"] = h.trained.informativeness
        return info

    # -- training ----------------------------------------------------------------

    @app.post("/datasets/{dataset_id}/train", status_code=202)
    def start_training(dataset_id: str, request: TrainRequest):
        handle = store.get(dataset_id)
        job = store.start_training(handle, request.to_config())
        return {"job_id": job.job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        return store.get_job(job_id).to_dict()

    # -- associations -------------------------------------------------------------

    @app.get("/datasets/{dataset_id}/associations")
    def associations(dataset_id: str):
        handle = store.get(dataset_id)
        trained = handle.require_trained()
        return [_association_summary(handle, u) for u in range(trained.config.k)]

    @app.get("/datasets/{dataset_id}/associations/{index}/relevance")
    def association_relevance(dataset_id: str, index: int):
        handle = store.get(dataset_id)
        trained = handle.require_trained()
        if not 0 <= index < trained.config.k:
            raise NotFound(f"association index {index} out of range")
        return {
            "index": index,
            "relevance": [float(v) for v in trained.associations[index].relevance],
        }

    @app.get("/datasets/{dataset_id}/associations/{index}/importance")
    def association_importance(dataset_id: str, index: int, full: bool = False):
        handle = store.get(dataset_id)
        trained = handle.require_trained()
        if not 0 <= index < trained.config.k:
            raise NotFound(f"association index {index} out of range")
        n_top = handle.raw.n if full else 4
        ranked = top_genes(trained.associations[index], handle.raw.gene_names, n_top=n_top)
        return {
            "index": index,
            "genes": [{"gene": g, "importance": imp} for g, imp in ranked],
        }

    @app.patch("/datasets/{dataset_id}/associations/{index}")
    def patch_association(dataset_id: str, index: int, patch: AssociationPatch):
        handle = store.get(dataset_id)
        handle.require_trained()
        handle.set_association_meta(index, color=patch.color, annotation=patch.annotation)
        return _association_summary(handle, index)

    # -- embeddings and pure regions ------------------------------------------------

    @app.get("/datasets/{dataset_id}/embedding")
    def embedding(dataset_id: str, source: str = "model"):
        handle = store.get(dataset_id)
        if source == "model":
            emb = embed_with_model(handle.require_trained(), handle.normalized)
        elif source == "pca":
            emb = embed_with_pca(handle.normalized)
        else:
            raise CellScoutError(f"unknown embedding source {source!r}")
        return {"source": emb.source, "points": emb.to_records(handle.raw.cell_ids)}

    @app.get("/datasets/{dataset_id}/pure-regions")
    def pure_regions(dataset_id: str, eps: float | None = None, min_pts: int = 10):
        handle = store.get(dataset_id)
        trained = handle.require_trained()
        coords = trained.embedding.coords
        if eps is None:
            eps = compute_delta(coords)
        labels = dominant_labels(trained.associations)
        found = detect_pure_regions(coords, labels, eps=eps, min_pts=min_pts)
        return {"eps": eps, "min_pts": min_pts, "pure_regions": [r.to_dict() for r in found]}

    # -- regions ------------------------------------------------------------------

    @app.post("/datasets/{dataset_id}/regions", status_code=201)
    def create_region(dataset_id: str, request: RegionRequest):
        handle = store.get(dataset_id)
        region = handle.add_region(request.name, request.cell_ids, origin=request.origin)
        return region.to_dict(handle.raw.cell_ids)

    @app.get("/datasets/{dataset_id}/regions")
    def list_regions(dataset_id: str):
        handle = store.get(dataset_id)
        return [r.to_dict(handle.raw.cell_ids) for r in handle.regions.values()]

    @app.delete("/datasets/{dataset_id}/regions/{region_id}", status_code=204)
    def delete_region(dataset_id: str, region_id: str):
        store.get(dataset_id).delete_region(region_id)

    @app.get("/datasets/{dataset_id}/regions/{region_id}/profile")
    def region_profile(dataset_id: str, region_id: str):
        handle = store.get(dataset_id)
        trained = handle.require_trained()
        region = handle.get_region(region_id)
        profile = relevance_profile(region, trained.associations)
        return {"region_id": region_id, **profile.to_dict()}

    @app.get("/datasets/{dataset_id}/regions/{region_id}/genes/{gene}/distribution")
    def region_gene_distribution(dataset_id: str, region_id: str, gene: str, bins: int = 12):
        handle = store.get(dataset_id)
        region = handle.get_region(region_id)
        try:
            hist = gene_distribution(region, gene, handle.normalized, bins=bins)
        except UnknownGene as exc:
            raise NotFound(str(exc)) from None
        return {"region_id": region_id, **hist.to_dict()}

    # -- verification -----------------------------------------------------------------

    @app.post("/datasets/{dataset_id}/verify", status_code=201)
    def verify(dataset_id: str, request: VerifyRequest):
        handle = store.get(dataset_id)
        positive = handle.get_region(request.positive_region)
        negative = handle.get_region(request.negative_region)
        result, biomarker = evaluate_biomarker(
            request.genes, positive, negative, handle.normalized
        )
        record = {
            "genes": list(biomarker.genes),
            "positive_region": request.positive_region,
            "negative_region": request.negative_region,
            "result": result.to_dict(),
        }
        return handle.append_verification(record)

    @app.get("/datasets/{dataset_id}/verifications")
    def verifications(dataset_id: str):
        return store.get(dataset_id).verifications

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
