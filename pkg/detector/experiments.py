# detector/experiments.py
"""
Experiment protocols.

ood      train on 90% of the ID dataset, score the held-out ID graphs against an
         equally sized sample of the OOD dataset
anomaly  train on the normal class only, score held-out normal and anomalous graphs
self     score two disjoint held-out halves of one dataset against each other

Each run uses seed cfg.seed + run. Runs are independent and execute in a
process pool when cfg.workers > 1.
"""

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from logzero import logger

from autograd.checkpoint import save_checkpoint
from detector.config import Mode
from detector.metrics import auc
from detector.reports import write_outputs
from detector.scoring import fit_score_stats, score
from detector.training import train
from graphs.features import align_features, synthesize_features
from graphs.tudataset import parse_tu_dataset
from sego.exceptions import ConfigurationError
from triplet.cache import ViewCache
from triplet.views import build_dataset_views


@dataclass
class ExperimentReport:
    mode: str
    datasets: list
    aucs: list
    config: dict
    test_sizes: list = field(default_factory=list)
    anomaly_fraction: Optional[float] = None
    wall_clock: float = 0.0

    @property
    def n_runs(self):
        return len(self.aucs)

    @property
    def mean(self):
        return float(np.mean(self.aucs))

    @property
    def std(self):
        return float(np.std(self.aucs))

    def as_dict(self):
        """Everything except wall-clock time, so identical runs give identical files."""
        out = {
            "mode": self.mode,
            "datasets": self.datasets,
            "n_runs": self.n_runs,
            "aucs": self.aucs,
            "auc_mean": self.mean,
            "auc_std": self.std,
            "test_sizes": self.test_sizes,
            "config": self.config,
        }
        if self.anomaly_fraction is not None:
            out["anomaly_fraction"] = self.anomaly_fraction
        return out

    def summary(self):
        return f"AUC {100 * self.mean:.2f} ± {100 * self.std:.2f} over {self.n_runs} runs"


@dataclass
class RunResult:
    run: int
    auc: float
    test_size: dict
    rows: list
    log: list
    anomaly_fraction: Optional[float] = None


@dataclass
class _RunJob:
    """Everything one run needs; sent whole to a worker process."""

    run: int
    cfg: object
    train_set: object
    train_views: list
    test: list                  # (source, graph_id, view, is_ood)
    anomaly_fraction: Optional[float] = None
    checkpoint: Optional[Path] = None


def _execute(job):
    log = []
    model = train(job.train_set, job.cfg, views=job.train_views, log=log.append, run=job.run)
    stats = fit_score_stats(model, job.train_views, job.cfg)

    rng = np.random.default_rng([job.cfg.seed, job.run, 1])
    test = [job.test[i] for i in rng.permutation(len(job.test))]
    errors, scores = score(model, stats, [t[2] for t in test], job.cfg)
    labels = [int(t[3]) for t in test]
    value = auc(scores, labels)

    rows = []
    for i, (source, graph_id, _, _) in enumerate(test):
        row = {"run": job.run, "graph_id": graph_id, "source": source,
               "s_l": errors.s_l[i], "s_g": errors.s_g[i], "s_G": scores[i]}
        if job.cfg.score_tree_term:
            row["s_t"] = errors.s_t[i]
        rows.append(row)
    rows.sort(key=lambda r: (r["source"], r["graph_id"]))

    if job.checkpoint is not None:
        save_checkpoint(job.checkpoint, model.named_parameters(), extras={"score_stats": stats.as_array()})
    logger.info(f"run {job.run}: AUC {100 * value:.2f} on {sum(labels)} OOD / {len(labels) - sum(labels)} ID")
    sizes = {"id_test": len(labels) - sum(labels), "ood_test": sum(labels)}
    return RunResult(job.run, value, sizes, rows, log, job.anomaly_fraction)


def _held_out(n, ratio, rng, keep_train=True):
    """Shuffle range(n) into (train, test) with round((1 - ratio) * n) test items, at least 1.

    With keep_train at least one item stays in train.
    """
    order = rng.permutation(n)
    n_test = max(1, int(round((1.0 - ratio) * n)))
    if keep_train:
        n_test = min(n - 1, n_test)
    return order[n_test:], order[:n_test]


def ood_jobs(id_data, id_views, ood_data, ood_views, cfg, split_ratio=0.9, n_runs=5):
    jobs = []
    for run in range(n_runs):
        run_cfg = cfg.model_copy(update={"seed": cfg.seed + run})
        rng = np.random.default_rng(run_cfg.seed)
        train_idx, test_idx = _held_out(len(id_data), split_ratio, rng)
        if len(ood_data) < len(test_idx):
            logger.warning(f"{ood_data.name} has {len(ood_data)} graphs, fewer than the "
                           f"{len(test_idx)} ID test graphs; using all of them")
        ood_idx = np.sort(rng.choice(len(ood_data), size=min(len(test_idx), len(ood_data)), replace=False))
        test = ([("id_test", int(i), id_views[i], False) for i in np.sort(test_idx)]
                + [("ood_test", int(i), ood_views[i], True) for i in ood_idx])
        jobs.append(_RunJob(run, run_cfg, id_data.subset(train_idx), [id_views[i] for i in train_idx], test))
    return jobs


def anomalous_label(dataset, requested=None):
    """The designated anomalous graph label, or the minority label (smallest value on ties)."""
    if not dataset.has_graph_labels:
        raise ConfigurationError(f"{dataset.name}: anomaly mode needs graph labels")
    labels = np.array([g.graph_label for g in dataset.graphs])
    values, counts = np.unique(labels, return_counts=True)
    if len(values) < 2:
        raise ConfigurationError(f"{dataset.name}: anomaly mode needs at least two graph labels")
    if requested is None:
        return int(values[np.argmin(counts)])
    if requested not in values:
        raise ConfigurationError(f"anomaly_label: {requested} is not a label of {dataset.name} ({values.tolist()})")
    return int(requested)


def anomaly_jobs(dataset, views, cfg, anomaly_label=None, test_fraction=0.2, n_runs=5):
    target = anomalous_label(dataset, anomaly_label)
    labels = np.array([g.graph_label for g in dataset.graphs])
    normal, anomalous = np.flatnonzero(labels != target), np.flatnonzero(labels == target)
    logger.info(f"{dataset.name}: label {target} is anomalous ({len(anomalous)} of {len(dataset)} graphs)")

    jobs = []
    for run in range(n_runs):
        run_cfg = cfg.model_copy(update={"seed": cfg.seed + run})
        rng = np.random.default_rng(run_cfg.seed)
        normal_train, normal_test = _held_out(len(normal), 1.0 - test_fraction, rng)
        _, anomalous_test = _held_out(len(anomalous), 1.0 - test_fraction, rng, keep_train=False)
        test = ([("id_test", int(normal[i]), views[normal[i]], False) for i in np.sort(normal_test)]
                + [("ood_test", int(anomalous[i]), views[anomalous[i]], True) for i in np.sort(anomalous_test)])
        fraction = len(anomalous_test) / len(test)
        train_idx = normal[normal_train]
        jobs.append(_RunJob(run, run_cfg, dataset.subset(train_idx), [views[i] for i in train_idx], test, fraction))
    return jobs


def self_consistency_jobs(dataset, views, cfg, split_ratio=0.9, n_runs=5):
    """Held-out graphs split into halves; the second half plays the OOD role."""
    jobs = []
    for run in range(n_runs):
        run_cfg = cfg.model_copy(update={"seed": cfg.seed + run})
        rng = np.random.default_rng(run_cfg.seed)
        train_idx, held_out = _held_out(len(dataset), split_ratio, rng)
        if len(held_out) < 2:
            raise ConfigurationError(f"{dataset.name}: too few graphs to hold out two test halves")
        half = len(held_out) // 2
        test = ([("id_test", int(i), views[i], False) for i in np.sort(held_out[:half])]
                + [("ood_test", int(i), views[i], True) for i in np.sort(held_out[half:])])
        jobs.append(_RunJob(run, run_cfg, dataset.subset(train_idx), [views[i] for i in train_idx], test))
    return jobs


def execute_jobs(jobs, workers=1, checkpoint_dir=None):
    if checkpoint_dir is not None:
        for job in jobs:
            job.checkpoint = Path(checkpoint_dir) / f"model_run{job.run}.bin"
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_execute, jobs))
    return [_execute(job) for job in jobs]


def summarize(mode, datasets, results, config, wall_clock=0.0):
    fractions = [r.anomaly_fraction for r in results if r.anomaly_fraction is not None]
    return ExperimentReport(
        mode=mode,
        datasets=datasets,
        aucs=[r.auc for r in results],
        config=config,
        test_sizes=[r.test_size for r in results],
        anomaly_fraction=float(np.mean(fractions)) if fractions else None,
        wall_clock=wall_clock,
    )


def _load(path):
    path = Path(path)
    return parse_tu_dataset(path, path.name)


def _views(dataset, cfg, cache):
    return build_dataset_views(dataset, cfg.k, cfg.r, workers=cfg.workers, cache=cache)


def run_ood_experiment(id_data, ood_data, cfg, n_runs=5, split_ratio=0.9, cache=None, checkpoint_dir=None):
    id_data, ood_data = align_features(id_data, ood_data, cfg.feature_scheme, cfg.degree_cap)
    jobs = ood_jobs(id_data, _views(id_data, cfg, cache), ood_data, _views(ood_data, cfg, cache), cfg, split_ratio, n_runs)
    results = execute_jobs(jobs, cfg.workers, checkpoint_dir)
    return summarize(Mode.OOD.value, [id_data.name, ood_data.name], results, cfg.model_dump(mode="json")), results


def run_anomaly_experiment(dataset, cfg, n_runs=5, anomaly_label=None, test_fraction=0.2, cache=None, checkpoint_dir=None):
    target = anomalous_label(dataset, anomaly_label)
    # feature space (scheme and label alphabet) comes from normal graphs only
    normal = dataset.subset([i for i, g in enumerate(dataset.graphs) if g.graph_label != target])
    _, dataset = align_features(normal, dataset, cfg.feature_scheme, cfg.degree_cap)
    jobs = anomaly_jobs(dataset, _views(dataset, cfg, cache), cfg, target, test_fraction, n_runs)
    results = execute_jobs(jobs, cfg.workers, checkpoint_dir)
    return summarize(Mode.ANOMALY.value, [dataset.name], results, cfg.model_dump(mode="json")), results


def run_self_consistency_experiment(dataset, cfg, n_runs=5, split_ratio=0.9, cache=None, checkpoint_dir=None):
    dataset = synthesize_features(dataset, cfg.feature_scheme, cfg.degree_cap)
    jobs = self_consistency_jobs(dataset, _views(dataset, cfg, cache), cfg, split_ratio, n_runs)
    results = execute_jobs(jobs, cfg.workers, checkpoint_dir)
    return summarize(Mode.SELF_CONSISTENCY.value, [dataset.name], results, cfg.model_dump(mode="json")), results


def run_experiment(cli_cfg):
    """Load data, run the configured protocol and write every output under cli_cfg.out."""
    cli_cfg.check_paths()
    cfg = cli_cfg.train_config()
    cache = ViewCache(cli_cfg.cache_dir) if cli_cfg.cache_dir else None
    out = Path(cli_cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    id_data = _load(cli_cfg.id_data)
    if cli_cfg.mode is Mode.OOD:
        report, results = run_ood_experiment(id_data, _load(cli_cfg.ood_data), cfg, cli_cfg.n_runs,
                                             cli_cfg.split_ratio, cache, out)
    elif cli_cfg.mode is Mode.ANOMALY:
        report, results = run_anomaly_experiment(id_data, cfg, cli_cfg.n_runs, cli_cfg.anomaly_label,
                                                 cli_cfg.anomaly_test_fraction, cache, out)
    else:
        report, results = run_self_consistency_experiment(id_data, cfg, cli_cfg.n_runs,
                                                          cli_cfg.split_ratio, cache, out)

    report.config = cli_cfg.model_dump(mode="json")
    report.wall_clock = time.perf_counter() - started
    rows = [row for r in results for row in r.rows]
    log = [record for r in results for record in r.log]
    write_outputs(out, report, rows, log, report.wall_clock)
    logger.info(report.summary())
    return report
