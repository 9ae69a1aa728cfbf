"""Dataset store: one directory per dataset holding inspectable JSON/CSV
artifacts, plus in-process handles with per-dataset write serialization and
background training jobs."""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .analytics import Region
from .data import (
    ExpressionMatrix,
    NormalizationSpec,
    load_matrix,
    normalize,
    save_matrix,
)
from .errors import (
    CellScoutError,
    NotFound,
    NotTrained,
    TrainingInProgress,
    UnknownDataset,
    UnknownJob,
    UnknownRegion,
)
from .miner import (
    MinerConfig,
    TrainedModel,
    model_from_dict,
    model_to_dict,
    train,
)

MATRIX_FILE = "matrix.csv"
META_FILE = "meta.json"
MODEL_FILE = "model.json"
REGIONS_FILE = "regions.json"
VERIFICATIONS_FILE = "verifications.json"
LABELS_FILE = "labels.csv"


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


class DatasetHandle:
    """One dataset: raw matrix, optional trained model, regions, history.

    Reads are lock-free on immutable snapshots; mutations (regions,
    annotations, verification history, trained-model swap) serialize on the
    per-dataset lock. At most one training job may be active at a time.
    """

    def __init__(self, dataset_dir: Path, dataset_id: str, name: str, raw: ExpressionMatrix):
        self.dir = dataset_dir
        self.id = dataset_id
        self.name = name
        self.raw = raw
        self.normalization = NormalizationSpec()
        self.trained: TrainedModel | None = None
        self.regions: dict[str, Region] = {}
        self.verifications: list[dict] = []
        self.colors: dict[int, str] = {}
        self.annotations: dict[int, str] = {}
        self.lock = threading.RLock()
        self.training_active = False
        self._normalized: ExpressionMatrix | None = None

    # -- derived views ---------------------------------------------------------

    @property
    def normalized(self) -> ExpressionMatrix:
        if self._normalized is None:
            self._normalized = normalize(self.raw, self.normalization)
        return self._normalized

    def require_trained(self) -> TrainedModel:
        if self.trained is None:
            raise NotTrained("dataset has no trained model yet")
        return self.trained

    # -- persistence -------------------------------------------------------------

    @classmethod
    def create(cls, dataset_dir: Path, raw: ExpressionMatrix, name: str) -> "DatasetHandle":
        dataset_dir.mkdir(parents=True, exist_ok=False)
        handle = cls(dataset_dir, dataset_dir.name, name, raw)
        save_matrix(raw, dataset_dir / MATRIX_FILE)
        handle.save_meta()
        return handle

    @classmethod
    def load(cls, dataset_dir: Path) -> "DatasetHandle":
        meta = json.loads((dataset_dir / META_FILE).read_text(encoding="utf-8"))
        raw = load_matrix(dataset_dir / MATRIX_FILE)
        handle = cls(dataset_dir, meta["id"], meta.get("name", meta["id"]), raw)
        spec = meta.get("normalization", {})
        handle.normalization = NormalizationSpec(
            method=spec.get("method", "log1p_zscore"),
            per_gene=spec.get("per_gene", True),
        )
        handle.colors = {int(k): v for k, v in meta.get("colors", {}).items()}
        handle.annotations = {int(k): v for k, v in meta.get("annotations", {}).items()}

        model_path = dataset_dir / MODEL_FILE
        if model_path.exists():
            data = json.loads(model_path.read_text(encoding="utf-8"))
            handle.trained = model_from_dict(data, handle.normalized)
        regions_path = dataset_dir / REGIONS_FILE
        if regions_path.exists():
            for item in json.loads(regions_path.read_text(encoding="utf-8")):
                region = Region.from_dict(item, raw.cell_ids)
                handle.regions[region.id] = region
        verif_path = dataset_dir / VERIFICATIONS_FILE
        if verif_path.exists():
            handle.verifications = json.loads(verif_path.read_text(encoding="utf-8"))
        return handle

    def save_meta(self) -> None:
        _write_json(
            self.dir / META_FILE,
            {
                "id": self.id,
                "name": self.name,
                "normalization": {
                    "method": self.normalization.method,
                    "per_gene": self.normalization.per_gene,
                },
                "colors": {str(k): v for k, v in self.colors.items()},
                "annotations": {str(k): v for k, v in self.annotations.items()},
            },
        )

    def save_model(self) -> None:
        trained = self.require_trained()
        (self.dir / MODEL_FILE).write_text(
            json.dumps(model_to_dict(trained), sort_keys=True) + "\n", encoding="utf-8"
        )

    def save_regions(self) -> None:
        _write_json(
            self.dir / REGIONS_FILE,
            [r.to_dict(self.raw.cell_ids) for r in self.regions.values()],
        )

    def save_verifications(self) -> None:
        _write_json(self.dir / VERIFICATIONS_FILE, self.verifications)

    # -- labels (synthetic ground truth, used by the benchmark) -------------------

    def save_labels(self, labels: np.ndarray) -> None:
        lines = ["cell_id,label"]
        lines += [f"{cid},{int(l)}" for cid, l in zip(self.raw.cell_ids, labels)]
        (self.dir / LABELS_FILE).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def load_labels(self) -> np.ndarray:
        path = self.dir / LABELS_FILE
        if not path.exists():
            raise CellScoutError(
                "dataset has no ground-truth labels; the benchmark needs labeled data"
            )
        by_id: dict[str, int] = {}
        for line in path.read_text(encoding="utf-8").splitlines()[1:]:
            cid, label = line.split(",")
            by_id[cid] = int(label)
        return np.array([by_id[cid] for cid in self.raw.cell_ids])

    # -- mutations -----------------------------------------------------------------

    def reserve_training(self) -> None:
        with self.lock:
            if self.training_active:
                raise TrainingInProgress(f"dataset {self.id} is already training")
            self.training_active = True

    def train_sync(
        self, config: MinerConfig, on_epoch=None, _reserved: bool = False
    ) -> TrainedModel:
        """Train exclusively; concurrent attempts are rejected, and readers
        keep the previous snapshot until the swap at the end."""
        if not _reserved:
            self.reserve_training()
        try:
            trained = train(self.normalized, config, on_epoch=on_epoch)
            with self.lock:
                self.trained = trained
                self.save_model()
            return trained
        finally:
            with self.lock:
                self.training_active = False

    def add_region(self, name: str, cell_ids: list[str], origin: str = "lasso") -> Region:
        index_of = {cid: i for i, cid in enumerate(self.raw.cell_ids)}
        missing = [cid for cid in cell_ids if cid not in index_of]
        if missing:
            raise CellScoutError(f"unknown cell ids: {missing[:5]}")
        region = Region(
            id=f"r-{uuid.uuid4().hex[:8]}",
            name=name,
            cell_indices=[index_of[cid] for cid in cell_ids],
            origin=origin,
        )
        with self.lock:
            self.regions[region.id] = region
            self.save_regions()
        return region

    def get_region(self, region_id: str) -> Region:
        try:
            return self.regions[region_id]
        except KeyError:
            raise UnknownRegion(f"unknown region {region_id!r}") from None

    def delete_region(self, region_id: str) -> None:
        with self.lock:
            if region_id not in self.regions:
                raise UnknownRegion(f"unknown region {region_id!r}")
            del self.regions[region_id]
            self.save_regions()

    def set_association_meta(
        self, index: int, color: str | None = None, annotation: str | None = None
    ) -> None:
        trained = self.require_trained()
        if not 0 <= index < trained.config.k:
            raise NotFound(f"association index {index} out of range")
        with self.lock:
            if color is not None:
                self.colors[index] = color
                trained.associations[index].color = color
            if annotation is not None:
                self.annotations[index] = annotation
                trained.associations[index].annotation = annotation
            self.save_meta()

    def append_verification(self, record: dict) -> dict:
        with self.lock:
            record = dict(record, order=len(self.verifications))
            self.verifications.append(record)
            self.save_verifications()
        return record


@dataclass
class JobStatus:
    job_id: str
    state: str = "queued"  # queued -> running -> done | failed
    epoch: int = 0
    total_epochs: int = 0
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "progress": {"epoch": self.epoch, "total": self.total_epochs},
            "error": self.error,
        }


class DatasetStore:
    """All datasets under one root directory, plus the training job registry."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.datasets: dict[str, DatasetHandle] = {}
        self.jobs: dict[str, JobStatus] = {}
        self._lock = threading.Lock()
        for child in sorted(self.root.iterdir()):
            if (child / META_FILE).exists():
                handle = DatasetHandle.load(child)
                self.datasets[handle.id] = handle

    def create_dataset(self, raw: ExpressionMatrix, name: str) -> DatasetHandle:
        dataset_id = f"d-{uuid.uuid4().hex[:8]}"
        handle = DatasetHandle.create(self.root / dataset_id, raw, name)
        with self._lock:
            self.datasets[handle.id] = handle
        return handle

    def get(self, dataset_id: str) -> DatasetHandle:
        try:
            return self.datasets[dataset_id]
        except KeyError:
            raise UnknownDataset(f"unknown dataset {dataset_id!r}") from None

    def single_dataset(self) -> DatasetHandle:
        if len(self.datasets) != 1:
            raise CellScoutError(
                f"store holds {len(self.datasets)} datasets; pass an explicit dataset id"
            )
        return next(iter(self.datasets.values()))

    # -- background training -------------------------------------------------------

    def start_training(self, handle: DatasetHandle, config: MinerConfig) -> JobStatus:
        handle.reserve_training()  # synchronous, so a second POST sees the conflict
        job = JobStatus(job_id=f"j-{uuid.uuid4().hex[:8]}", total_epochs=config.epochs)
        self.jobs[job.job_id] = job

        def run() -> None:
            job.state = "running"
            try:
                def on_epoch(epoch: int, _breakdown) -> None:
                    job.epoch = epoch + 1

                handle.train_sync(config, on_epoch=on_epoch, _reserved=True)
                job.state = "done"
            except Exception as exc:  # report, never crash the server
                job.state = "failed"
                job.error = f"{getattr(exc, 'code', type(exc).__name__)}: {exc}"

        threading.Thread(target=run, daemon=True).start()
        return job

    def get_job(self, job_id: str) -> JobStatus:
        try:
            return self.jobs[job_id]
        except KeyError:
            raise UnknownJob(f"unknown job {job_id!r}") from None
