"""Command-line interface.

Exit codes: 0 success, 1 domain error (the machine-readable error code is
printed to stderr), 2 usage error.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from .bench import SyntheticSpec, generate_synthetic, run_benchmark
from .data import load_matrix
from .errors import CellScoutError
from .miner import MinerConfig, select_k
from .store import DatasetStore
from .verification import evaluate_biomarker


def domain_errors(fn):
    """Map domain failures to exit code 1 with the error code on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CellScoutError as exc:
            click.echo(f"{exc.code}: {exc}", err=True)
            sys.exit(1)

    return wrapper


def _resolve(store_path: str, dataset: str | None) -> tuple[DatasetStore, "DatasetHandle"]:
    store = DatasetStore(store_path)
    handle = store.get(dataset) if dataset else store.single_dataset()
    return store, handle


def _config_from_options(**kwargs) -> MinerConfig:
    return MinerConfig(**{k: v for k, v in kwargs.items() if v is not None})


@click.group()
def main():
    """Mine cell-population / biomarker-gene association relationships."""


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "store_path", required=True, type=click.Path(file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "tsv"]), default="csv")
@click.option("--name", default=None, help="Dataset display name.")
@domain_errors
def ingest(csv_path: str, store_path: str, fmt: str, name: str | None):
    """Load an expression matrix into a dataset store."""
    matrix = load_matrix(csv_path, format=fmt)
    store = DatasetStore(store_path)
    handle = store.create_dataset(matrix, name or Path(csv_path).stem)
    click.echo(f"dataset {handle.id}: {matrix.m} cells x {matrix.n} genes")


@main.command("generate-synthetic")
@click.option("--out", "store_path", required=True, type=click.Path(file_okay=False))
@click.option("--states", default=3, show_default=True)
@click.option("--cells-per-state", default=200, show_default=True)
@click.option("--genes", default=60, show_default=True)
@click.option("--markers-per-state", default=8, show_default=True)
@click.option("--marker-lift", default=3.0, show_default=True)
@click.option("--noise-sd", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@domain_errors
def generate_synthetic_cmd(
    store_path, states, cells_per_state, genes, markers_per_state, marker_lift, noise_sd, seed
):
    """Create a planted-state synthetic dataset with ground-truth labels."""
    spec = SyntheticSpec(
        n_states=states,
        cells_per_state=cells_per_state,
        n_genes=genes,
        markers_per_state=markers_per_state,
        marker_lift=marker_lift,
        noise_sd=noise_sd,
        seed=seed,
    )
    matrix, labels, markers = generate_synthetic(spec)
    store = DatasetStore(store_path)
    handle = store.create_dataset(matrix, f"synthetic-{states}x{cells_per_state}")
    handle.save_labels(labels)
    (handle.dir / "markers.json").write_text(json.dumps(markers) + "\n", encoding="utf-8")
    click.echo(f"dataset {handle.id}: {matrix.m} cells x {matrix.n} genes, {states} states")


@main.command()
@click.argument("store_path", type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", default=None)
@click.option("--k", default=8, show_default=True)
@click.option("--epochs", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--learning-rate", default=0.1, show_default=True)
@click.option("--batch-size", default=256, show_default=True)
@click.option("--genes-per-expert", default=32, show_default=True)
@domain_errors
def train(store_path, dataset, k, epochs, seed, learning_rate, batch_size, genes_per_expert):
    """Train the mining model and persist it into the store."""
    _, handle = _resolve(store_path, dataset)
    config = MinerConfig(
        k=k,
        epochs=epochs,
        seed=seed,
        learning_rate=learning_rate,
        batch_size=batch_size,
        genes_per_expert=genes_per_expert,
    )
    trained = handle.train_sync(config)
    first, last = trained.history[0].total, trained.history[-1].total
    click.echo(
        f"trained k={k} for {epochs} epochs: loss {first:.4f} -> {last:.4f}, "
        f"informativeness {trained.informativeness:.4f}"
    )
    click.echo(f"model written to {handle.dir / 'model.json'}")


@main.command("sweep-k")
@click.argument("store_path", type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", default=None)
@click.option("--candidates", default="4,6,8,10,12", show_default=True)
@click.option("--epochs", default=300, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@domain_errors
def sweep_k(store_path, dataset, candidates, epochs, seed, out_path):
    """Sweep the expert count and report informativeness per candidate."""
    _, handle = _resolve(store_path, dataset)
    k_list = [int(tok) for tok in candidates.split(",") if tok]
    template = MinerConfig(k=max(k_list[0], 2), epochs=epochs, seed=seed)
    report = select_k(handle.normalized, template, k_list)
    click.echo("k\tinformativeness")
    for entry in report.entries:
        value = f"{entry.informativeness:.4f}" if entry.informativeness is not None else entry.error
        click.echo(f"{entry.k}\t{value}")
    click.echo(f"chosen k: {report.chosen_k}")
    if out_path:
        Path(out_path).write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")


@main.command()
@click.argument("store_path", type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", default=None)
@click.option("--split-seed", default=0, show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
@domain_errors
def benchmark(store_path, dataset, split_seed, out_path):
    """Score the model embedding against the PCA baseline (labeled data)."""
    _, handle = _resolve(store_path, dataset)
    labels = handle.load_labels()
    report = run_benchmark(handle.normalized, labels, handle.require_trained(), split_seed)
    click.echo(report.to_csv(), nl=False)
    if out_path:
        base = Path(out_path)
        base.with_suffix(".csv").write_text(report.to_csv(), encoding="utf-8")
        base.with_suffix(".json").write_text(
            json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8"
        )


@main.command("add-region")
@click.argument("store_path", type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", default=None)
@click.option("--name", required=True)
@click.option("--cells", required=True, help="Comma-separated cell ids.")
@domain_errors
def add_region(store_path, dataset, name, cells):
    """Create and persist a named cell region."""
    _, handle = _resolve(store_path, dataset)
    region = handle.add_region(name, [c for c in cells.split(",") if c], origin="manual")
    click.echo(f"region {region.id}: {len(region.cell_indices)} cells")


@main.command()
@click.argument("store_path", type=click.Path(exists=True, file_okay=False))
@click.option("--dataset", default=None)
@click.option("--genes", required=True, help="Comma-separated gene names.")
@click.option("--pos", "positive", required=True, help="Positive region id.")
@click.option("--neg", "negative", required=True, help="Negative region id.")
@domain_errors
def verify(store_path, dataset, genes, positive, negative):
    """Threshold the genes on two regions and report F1/accuracy."""
    _, handle = _resolve(store_path, dataset)
    gene_list = [g for g in genes.split(",") if g]
    result, biomarker = evaluate_biomarker(
        gene_list,
        handle.get_region(positive),
        handle.get_region(negative),
        handle.normalized,
    )
    record = {
        "genes": list(biomarker.genes),
        "positive_region": positive,
        "negative_region": negative,
        "result": result.to_dict(),
    }
    handle.append_verification(record)
    click.echo(f"f1 {result.f1:.4f}  accuracy {result.accuracy:.4f}")
    for predicate in result.per_gene:
        click.echo(
            f"  {predicate.gene}: {predicate.direction} {predicate.threshold:.4f} "
            f"(ig {predicate.information_gain:.4f})"
        )


@main.command()
@click.argument("store_path", type=click.Path(exists=True, file_okay=False))
@click.option("--port", default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--ui",
    "ui_dir",
    default=None,
    type=click.Path(exists=True, file_okay=False),
    help="Mount a built frontend directory at /ui.",
)
@domain_errors
def serve(store_path, port, host, ui_dir):
    """Serve the HTTP API over a dataset store. CELLSCOUT_PORT overrides
    --port."""
    import uvicorn

    from .api import create_app

    port = int(os.environ.get("CELLSCOUT_PORT", port))
    app = create_app(DatasetStore(store_path), ui_dir=Path(ui_dir) if ui_dir else None)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
