"""End-to-end experiment: load or generate data, train, cluster, score, write."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import Partition, SomConfig, kmeans, som_assign, som_fit
from .errors import ValidationError
from .graph import DynamicNetwork, read_network, read_partitions, write_partitions
from .lfr import LfrConfig, generate_dynamic_lfr
from .metrics import SequenceReport, evaluate_sequence, write_metrics_csv
from .model import ModelConfig
from .trainer import TrainConfig, TrainResult, train, write_train_log

log = logging.getLogger(__name__)

METHODS = ("som", "kmeans")


@dataclass(frozen=True)
class ExperimentConfig:
    lfr: LfrConfig | None = None
    network_path: str | None = None
    truth_path: str | None = None
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    method: str = "som"
    som: SomConfig = field(default_factory=SomConfig)
    k: int | None = None
    seed: int = 0

    def validate(self) -> "ExperimentConfig":
        if (self.lfr is None) == (self.network_path is None):
            raise ValidationError("give exactly one dataset source: LFR parameters or a network file")
        if self.truth_path is not None and self.network_path is None:
            raise ValidationError("a ground-truth file only goes with a network file")
        if self.method not in METHODS:
            raise ValidationError(f"clustering method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.k is not None and self.k < 1:
            raise ValidationError("k must be positive")
        if self.lfr is not None:
            self.lfr.validate()
        self.model.validate()
        self.train.validate()
        self.som.validate()
        return self

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Same experiment with every random stream keyed to ``seed``."""
        return replace(
            self,
            seed=seed,
            lfr=None if self.lfr is None else replace(self.lfr, seed=seed),
            train=replace(self.train, seed=seed),
            som=replace(self.som, seed=seed),
        )

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunOutput:
    network: DynamicNetwork
    result: TrainResult
    partitions: list[Partition]
    report: SequenceReport | None


def load_dataset(cfg: ExperimentConfig) -> DynamicNetwork:
    if cfg.lfr is not None:
        return generate_dynamic_lfr(cfg.lfr)
    network = read_network(cfg.network_path)
    if cfg.truth_path is not None:
        truth = read_partitions(cfg.truth_path, n=network.n)
        network = network.with_ground_truth(truth)
    return network


def cluster_sequence(embeddings: list[np.ndarray], cfg: ExperimentConfig, network: DynamicNetwork) -> list[Partition]:
    parts = []
    for t, h in enumerate(embeddings, start=1):
        if cfg.method == "som":
            units = som_fit(h, cfg.som)
            parts.append(som_assign(h, units, t=t))
        else:
            k = cfg.k
            if k is None:
                truth = network.truth(t)
                if truth is None:
                    raise ValidationError("K-means needs k when no ground truth is available")
                k = len(np.unique(truth))
            parts.append(kmeans(h, min(k, network.n), seed=cfg.seed, t=t))
    return parts


def run_experiment(cfg: ExperimentConfig, network: DynamicNetwork | None = None) -> RunOutput:
    cfg.validate()
    if network is None:
        network = load_dataset(cfg)
    result = train(network, cfg.model, cfg.train)
    partitions = cluster_sequence(result.embeddings, cfg, network)
    report = None
    if network.ground_truth is not None:
        report = evaluate_sequence(partitions, list(network.ground_truth))
    else:
        log.warning("no ground truth: metrics skipped, partitions still written")
    return RunOutput(network, result, partitions, report)


def write_manifest(path, command: str, argv: list[str] | None, config: dict) -> None:
    manifest = {"command": command, "argv": argv, "version": __version__, "config": config}
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_run(out_dir, output: RunOutput, cfg: ExperimentConfig, argv: list[str] | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_partitions(out / "partitions.txt", output.partitions)
    if output.report is not None:
        write_metrics_csv(out / "metrics.csv", output.report)
    write_train_log(out / "train_log.csv", output.result.history, output.network.T)
    np.savez(out / "embeddings.npz", **{f"h_{t}": h for t, h in enumerate(output.result.embeddings, start=1)})
    write_manifest(out / "manifest.json", "run", argv, cfg.as_dict())
