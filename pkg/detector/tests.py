import dataclasses
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pandas as pd
import ujson
from logzero import logger

from detector.config import CliConfig, Mode, TrainConfig, build_config, read_config_file
from detector.experiments import (
    ExperimentReport, _execute, anomalous_label, anomaly_jobs, ood_jobs, run_anomaly_experiment,
    run_self_consistency_experiment,
)
from detector.metrics import auc
from detector.reports import read_train_log, write_outputs
from detector.scoring import GraphErrors, ScoreStats, fit_score_stats, score, z_scores
from detector.training import batch_indices, train
from graphs import fixtures
from graphs.features import synthesize_features
from graphs.models import Dataset
from sego.exceptions import ConfigurationError, UndefinedMetricError
from triplet.views import build_dataset_views


def tiny_config(**overrides):
    values = dict(epochs=2, batch_size=4, hidden_dim=4, contrast_dim=4, num_layers=2, k=2, r=3, seed=3, workers=1)
    values.update(overrides)
    return TrainConfig(**values)


def random_dataset(name, n, seed, labels=None, max_nodes=6):
    rng = np.random.default_rng(seed)
    graphs = [fixtures.random_connected(rng, max_nodes) for _ in range(n)]
    if labels is not None:
        graphs = [dataclasses.replace(g, graph_label=int(l)) for g, l in zip(graphs, labels)]
    return synthesize_features(Dataset(name, tuple(graphs)), "one_hot_degree", cap=5)


class ConfigTests(unittest.TestCase):

    def test_defaults(self):
        cfg = TrainConfig()
        self.assertEqual((cfg.k, cfg.tau, cfg.theta, cfg.batch_size, cfg.epochs), (5, 0.2, 1.0, 64, 150))
        self.assertEqual(CliConfig().n_runs, 5)

    def test_unknown_key_is_named(self):
        with self.assertRaisesRegex(ConfigurationError, "bogus"):
            build_config(CliConfig, {"bogus": "1"})

    def test_constraints(self):
        for key, value in (("batch_size", 1), ("k", 0), ("epochs", 0), ("tau", 0)):
            with self.assertRaisesRegex(ConfigurationError, key):
                build_config(TrainConfig, {key: value})

    def test_flags_override_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp, "exp.cfg")
            path.write_text("mode=anomaly\nk=3\nseed=4\nscore_tree_term=true\n")
            cfg = build_config(CliConfig, read_config_file(path), {"seed": 7, "k": None})
        self.assertIs(cfg.mode, Mode.ANOMALY)
        self.assertEqual((cfg.k, cfg.seed), (3, 7))
        self.assertTrue(cfg.score_tree_term)
        self.assertEqual(cfg.train_config().k, 3)

    def test_missing_config_file(self):
        with self.assertRaises(ConfigurationError):
            read_config_file("/nonexistent/exp.cfg")

    def test_missing_dataset_path(self):
        cfg = CliConfig(id_data="/nonexistent/BZR", ood_data="/nonexistent/COX2")
        with self.assertRaisesRegex(ConfigurationError, "id_data"):
            cfg.check_paths()


class MetricTests(unittest.TestCase):

    def test_perfect_separation(self):
        self.assertEqual(auc([0.1, 0.4, 0.9], [0, 0, 1]), 1.0)

    def test_all_ties(self):
        self.assertEqual(auc([2.0] * 4, [0, 1, 0, 1]), 0.5)

    def test_pair_counting(self):
        self.assertEqual(auc([1, 2, 3, 4], [1, 0, 1, 0]), 0.25)

    def test_single_class(self):
        with self.assertRaises(UndefinedMetricError):
            auc([0.1, 0.2], [0, 0])

    def test_monotone_transform(self):
        rng = np.random.default_rng(0)
        scores, labels = rng.normal(size=20), np.array([0, 1] * 10)
        self.assertAlmostEqual(auc(scores, labels), auc(np.exp(3 * scores) + 1, labels), places=12)

    def test_matches_pair_counting_with_ties(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            n = int(rng.integers(2, 51))
            labels = rng.integers(0, 2, n)
            labels[:2] = [0, 1]
            scores = rng.integers(0, 6, n) / 2.0
            pos, neg = scores[labels == 1], scores[labels == 0]
            wins = sum((p > q) + 0.5 * (p == q) for p in pos for q in neg)
            self.assertEqual(auc(scores, labels), wins / (len(pos) * len(neg)))


class TrainingTests(unittest.TestCase):

    def test_batches_merge_a_lonely_tail(self):
        self.assertEqual([len(b) for b in batch_indices(np.arange(9), 4)], [4, 5])
        self.assertEqual([len(b) for b in batch_indices(np.arange(3), 64)], [3])

    def test_loss_does_not_rise_on_copies(self):
        ds = Dataset("k2x4", tuple(fixtures.k2() for _ in range(4)))
        model = train(ds, tiny_config(epochs=2))
        self.assertEqual(len(model.epoch_losses), 2)
        self.assertLessEqual(model.epoch_losses[1], model.epoch_losses[0] + 1e-9)

    def test_same_seed_same_parameters(self):
        ds = random_dataset("rand", 6, seed=1)
        a = train(ds, tiny_config()).named_parameters()
        b = train(ds, tiny_config()).named_parameters()
        for name in a:
            self.assertEqual(a[name].data.tobytes(), b[name].data.tobytes())

    def test_one_batch_per_epoch_when_batch_is_large(self):
        records = []
        train(random_dataset("rand", 5, seed=2), tiny_config(batch_size=64), log=records.append)
        self.assertEqual([(r["epoch"], r["step"]) for r in records], [(1, 0), (2, 0)])

    def test_needs_two_graphs(self):
        with self.assertRaises(ConfigurationError):
            train(Dataset("one", (fixtures.k3(),)), tiny_config())


class ScoringTests(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cfg = tiny_config()
        cls.dataset = random_dataset("rand", 7, seed=5)
        cls.views = build_dataset_views(cls.dataset, cls.cfg.k, cls.cfg.r)
        cls.model = train(cls.dataset, cls.cfg, views=cls.views)

    def test_stats_ignore_training_order(self):
        forward = fit_score_stats(self.model, self.views, self.cfg)
        backward = fit_score_stats(self.model, self.views[::-1], self.cfg)
        self.assertEqual(forward, backward)

    def test_mean_matches_graph_errors(self):
        stats = fit_score_stats(self.model, self.views, self.cfg, batch_size=64)
        errors, _ = score(self.model, stats, self.views, self.cfg, batch_size=64)
        self.assertAlmostEqual(stats.mu_l, float(np.mean(errors.s_l)), places=12)

    def test_constant_errors_fall_back_to_unit_sigma(self):
        copies = Dataset("k3x4", tuple(fixtures.k3() for _ in range(4)))
        views = build_dataset_views(copies, 2, 3)
        model = train(copies, self.cfg, views=views)
        with self.assertLogs(logger, level="WARNING"):
            stats = fit_score_stats(model, views, self.cfg)
        self.assertEqual((stats.sigma_l, stats.sigma_g), (1.0, 1.0))

    def test_scores_are_finite(self):
        stats = fit_score_stats(self.model, self.views, self.cfg)
        _, scores = score(self.model, stats, self.views, self.cfg)
        self.assertTrue(np.all(np.isfinite(scores)))

    def test_z_score_identities(self):
        stats = ScoreStats(mu_l=1.0, sigma_l=0.5, mu_g=2.0, sigma_g=1.0, mu_t=3.0, sigma_t=2.0)
        errors = GraphErrors(np.array([1.0, 2.0]), np.array([2.0, 2.0]), np.array([3.0, 5.0]))
        np.testing.assert_allclose(z_scores(errors, stats), [0.0, 2.0])
        doubled = dataclasses.replace(stats, sigma_l=1.0)
        np.testing.assert_allclose(z_scores(errors, doubled), [0.0, 1.0])
        np.testing.assert_allclose(z_scores(errors, stats, tree_term=True), [0.0, 3.0])

    def test_stats_round_trip_through_array(self):
        stats = ScoreStats(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
        self.assertEqual(ScoreStats.from_array(stats.as_array()), stats)


class ExperimentTests(unittest.TestCase):

    def test_ood_data_never_reaches_the_model(self):
        cfg = tiny_config()
        id_data = random_dataset("id", 10, seed=7)
        ood_a = random_dataset("ood_a", 5, seed=8)
        ood_b = random_dataset("ood_b", 5, seed=9, max_nodes=5)
        id_views = build_dataset_views(id_data, cfg.k, cfg.r)
        with tempfile.TemporaryDirectory() as tmp:
            digests = []
            for ood in (ood_a, ood_b):
                job = ood_jobs(id_data, id_views, ood, build_dataset_views(ood, cfg.k, cfg.r), cfg, 0.8, 1)[0]
                job.checkpoint = Path(tmp, f"{ood.name}.bin")
                result = _execute(job)
                self.assertEqual(result.test_size, {"id_test": 2, "ood_test": 2})
                digests.append(job.checkpoint.read_bytes())
        self.assertEqual(digests[0], digests[1])

    def test_short_ood_set_is_used_whole(self):
        cfg = tiny_config()
        id_data, ood = random_dataset("id", 10, seed=7), random_dataset("ood", 1, seed=8)
        with self.assertLogs(logger, level="WARNING"):
            jobs = ood_jobs(id_data, build_dataset_views(id_data, 2, 3), ood, build_dataset_views(ood, 2, 3), cfg, 0.7, 1)
        self.assertEqual(sum(t[3] for t in jobs[0].test), 1)

    def test_minority_label_is_anomalous(self):
        ds = random_dataset("lab", 6, seed=1, labels=[0, 0, 0, 1, 1, 2])
        self.assertEqual(anomalous_label(ds), 2)
        self.assertEqual(anomalous_label(ds, 1), 1)
        with self.assertRaises(ConfigurationError):
            anomalous_label(ds, 5)

    def test_anomaly_mode_needs_labels(self):
        with self.assertRaises(ConfigurationError):
            anomalous_label(random_dataset("nolab", 4, seed=1))

    def test_anomaly_experiment(self):
        ds = random_dataset("lab", 12, seed=4, labels=[0] * 8 + [1] * 4)
        jobs = anomaly_jobs(ds, build_dataset_views(ds, 2, 3), tiny_config(), test_fraction=0.25, n_runs=1)
        self.assertTrue(all(g.graph_label == 0 for g in jobs[0].train_set))
        report, results = run_anomaly_experiment(ds, tiny_config(), n_runs=2, test_fraction=0.25)
        self.assertEqual(report.n_runs, 2)
        self.assertAlmostEqual(report.anomaly_fraction, 1 / 3)
        self.assertEqual({r["source"] for r in results[0].rows}, {"id_test", "ood_test"})
        self.assertTrue(all(0.0 <= a <= 1.0 for a in report.aucs))

    def test_anomalous_node_labels_do_not_reach_training(self):
        def labelled(anomalous_node_label):
            rng = np.random.default_rng(11)
            graphs = []
            for i in range(12):
                g = fixtures.random_connected(rng, 6)
                anomalous = i >= 8
                labels = (np.full(g.node_count, anomalous_node_label) if anomalous
                          else rng.integers(0, 2, g.node_count))
                graphs.append(dataclasses.replace(g, node_labels=labels, graph_label=int(anomalous)))
            return Dataset("lab", tuple(graphs))

        blobs = []
        for node_label in (1, 7):
            with tempfile.TemporaryDirectory() as tmp:
                run_anomaly_experiment(labelled(node_label), tiny_config(feature_scheme="one_hot_label"),
                                       n_runs=1, test_fraction=0.25, checkpoint_dir=tmp)
                blobs.append(Path(tmp, "model_run0.bin").read_bytes())
        self.assertEqual(blobs[0], blobs[1])

    def test_self_consistency_runs(self):
        ds = random_dataset("rand", 12, seed=6)
        report, results = run_self_consistency_experiment(ds, tiny_config(), n_runs=2, split_ratio=0.6)
        self.assertEqual(len(report.aucs), 2)
        self.assertEqual({r["source"] for r in results[0].rows}, {"id_test", "ood_test"})

    def test_outputs(self):
        ds = random_dataset("rand", 12, seed=6)
        report, results = run_self_consistency_experiment(ds, tiny_config(score_tree_term=True), n_runs=1,
                                                          split_ratio=0.6)
        with tempfile.TemporaryDirectory() as tmp:
            rows = [row for r in results for row in r.rows]
            write_outputs(tmp, report, rows, results[0].log, 1.5)
            frame = pd.read_csv(Path(tmp, "scores.csv"))
            written = ujson.loads(Path(tmp, "report.json").read_text())
            timing = ujson.loads(Path(tmp, "timing.json").read_text())
            log = read_train_log(Path(tmp, "train_log.jsonl"))
        self.assertEqual(list(frame.columns), ["run", "graph_id", "source", "s_l", "s_g", "s_G", "s_t"])
        self.assertEqual(len(frame), 5)
        self.assertNotIn("wall_clock", written)
        self.assertEqual(written["n_runs"], 1)
        self.assertEqual(timing["wall_clock_seconds"], 1.5)
        self.assertEqual(len(log), len(results[0].log))
        self.assertIn("sigma_l", log[0])

    def test_report_summary(self):
        report = ExperimentReport("ood", ["BZR", "COX2"], [0.9, 1.0], {})
        self.assertEqual(report.summary(), "AUC 95.00 ± 5.00 over 2 runs")


if __name__ == "__main__":
    unittest.main()
