import contextlib
import io
import tempfile
import unittest
from pathlib import Path
from unittest import mock

import numpy as np
import ujson

from detector.reports import read_train_log
from graphs import fixtures
from graphs.models import Dataset
from graphs.tudataset import write_tu_dataset
from sego import settings
from sego.binio import read_arrays, write_arrays
from sego.cli import execute_from_command_line
from sego.exceptions import DataIntegrityError
from sego.selftest import run_selftest

SMALL_MODEL = "hidden_dim=4\ncontrast_dim=4\nnum_layers=2\nsplit_ratio=0.6\n"


def call(*argv):
    stdout = io.StringIO()
    with contextlib.redirect_stdout(stdout):
        code = execute_from_command_line(["sego", *argv])
    return code, stdout.getvalue()


def write_random_dataset(directory, name="rand", n=12, seed=0):
    rng = np.random.default_rng(seed)
    ds = Dataset(name, tuple(fixtures.random_connected(rng) for _ in range(n)))
    write_tu_dataset(ds, Path(directory, name), name)
    return Path(directory, name)


class BinioTests(unittest.TestCase):

    def test_round_trip_keeps_order_and_bits(self):
        arrays = {"b": np.array([[0.1, -2.5]]), "a": np.arange(6).reshape(2, 3), "empty": np.zeros((0, 4))}
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp, "x.bin")
            write_arrays(path, arrays)
            back = read_arrays(path)
        self.assertEqual(list(back), ["b", "a", "empty"])
        self.assertEqual(back["b"].tobytes(), arrays["b"].tobytes())
        self.assertEqual(back["a"].dtype, np.dtype("<i8"))
        self.assertEqual(back["empty"].shape, (0, 4))

    def test_wrong_magic(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp, "x.bin")
            write_arrays(path, {"a": np.ones((1, 1))}, magic=b"OTHERBIN")
            with self.assertRaises(DataIntegrityError):
                read_arrays(path)


class TreeCommandTests(unittest.TestCase):

    def test_k2_fixture(self):
        code, out = call("tree", "--fixture", "k2", "--k", "2")
        self.assertEqual(code, 0)
        self.assertIn("flat=1.000000", out)
        self.assertIn("built=1.000000", out)

    def test_zero_height(self):
        self.assertEqual(call("tree", "--fixture", "k3", "--k", "0")[0], 2)

    def test_index_out_of_range(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_random_dataset(tmp, n=3)
            self.assertEqual(call("tree", "--data", str(path), "--index", "3")[0], 2)
            code, out = call("tree", "--data", str(path), "--index", "2", "--k", "2")
        self.assertEqual(code, 0)
        built = float(out.split("built=")[1])
        flat = float(out.split("flat=")[1].split()[0])
        self.assertLessEqual(built, flat + 1e-6)

    def test_missing_directory(self):
        self.assertEqual(call("tree", "--data", "/nonexistent/BZR")[0], 2)


class RunCommandTests(unittest.TestCase):

    def test_missing_dataset_path(self):
        with tempfile.TemporaryDirectory() as tmp:
            code, _ = call("run", "--mode", "ood", "--id-data", "/nonexistent/BZR",
                           "--ood-data", "/nonexistent/COX2", "--out", tmp)
        self.assertEqual(code, 2)

    def test_unknown_config_key(self):
        with tempfile.TemporaryDirectory() as tmp:
            config = Path(tmp, "exp.cfg")
            config.write_text("mode=self\nlearning_rte=0.01\n")
            code, _ = call("run", "--config", str(config), "--out", tmp)
        self.assertEqual(code, 2)

    def test_corrupt_dataset(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_random_dataset(tmp, n=3)
            Path(path, "rand_A.txt").write_text("1, 99\n")
            code, _ = call("run", "--mode", "self", "--id-data", str(path), "--out", str(Path(tmp, "out")))
        self.assertEqual(code, 3)

    def test_same_seed_same_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            data = write_random_dataset(tmp)
            config = Path(tmp, "exp.cfg")
            config.write_text(SMALL_MODEL + f"mode=self\nid_data={data}\nepochs=1\nbatch_size=4\nk=2\nr=3\n")
            reports, scores = [], []
            for attempt in ("a", "b"):
                out = Path(tmp, f"out_{attempt}")
                code, stdout = call("run", "--config", str(config), "--seed", "7", "--runs", "2", "--out", str(out))
                self.assertEqual(code, 0)
                self.assertIn("AUC", stdout)
                for name in ("scores.csv", "report.json", "timing.json", "train_log.jsonl", "sego.log",
                             "model_run0.bin", "model_run1.bin"):
                    self.assertTrue(Path(out, name).is_file(), name)
                reports.append(Path(out, "report.json").read_bytes())
                scores.append(Path(out, "scores.csv").read_bytes())
        self.assertEqual(reports[0], reports[1])
        self.assertEqual(scores[0], scores[1])

    def test_global_only_run(self):
        with tempfile.TemporaryDirectory() as tmp:
            data = write_random_dataset(tmp)
            config = Path(tmp, "exp.cfg")
            config.write_text(SMALL_MODEL + f"mode=self\nid_data={data}\nepochs=1\nbatch_size=4\nk=2\nr=3\n")
            out = Path(tmp, "out")
            code, stdout = call("run", "--config", str(config), "--runs", "1", "--disable-tree", "--disable-local",
                                "--out", str(out))
            report = ujson.loads(Path(out, "report.json").read_text())
            log = read_train_log(Path(out, "train_log.jsonl"))
        self.assertEqual(code, 0)
        self.assertIn("AUC", stdout)
        self.assertTrue(report["config"]["disable_tree"])
        self.assertTrue(report["config"]["disable_local"])
        self.assertTrue(all(r["w_tree"] == 0.0 and r["w_local"] == 0.0 for r in log))
        self.assertEqual(len(report["aucs"]), 1)


def has_dataset(*names):
    return all((settings.DATA_DIR / name / f"{name}_A.txt").is_file() for name in names)


class PublishedPairTests(unittest.TestCase):
    """Full-size runs on TU benchmark pairs found under SEGO_DATA_DIR."""

    def run_pair(self, tmp, mode, id_name, ood_name=None, *flags):
        argv = ["run", "--mode", mode, "--id-data", str(settings.DATA_DIR / id_name), "--out", tmp, *flags]
        if ood_name:
            argv += ["--ood-data", str(settings.DATA_DIR / ood_name)]
        code, _ = call(*argv)
        self.assertEqual(code, 0)
        return ujson.loads(Path(tmp, "report.json").read_text())

    @unittest.skipUnless(has_dataset("BZR", "COX2"), "BZR/COX2 not available")
    def test_bzr_cox2(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = self.run_pair(tmp, "ood", "BZR", "COX2")
        self.assertEqual(report["n_runs"], 5)
        self.assertGreaterEqual(report["auc_mean"], 0.85)

    @unittest.skipUnless(has_dataset("AIDS", "DHFR"), "AIDS/DHFR not available")
    def test_aids_dhfr(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = self.run_pair(tmp, "ood", "AIDS", "DHFR")
        self.assertGreaterEqual(report["auc_mean"], 0.90)

    @unittest.skipUnless(has_dataset("BZR"), "BZR not available")
    def test_bzr_against_itself(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = self.run_pair(tmp, "self", "BZR")
        self.assertLessEqual(abs(report["auc_mean"] - 0.5), 0.1)

    @unittest.skipUnless(has_dataset("BZR", "COX2"), "BZR/COX2 not available")
    def test_bzr_cox2_global_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = self.run_pair(tmp, "ood", "BZR", "COX2", "--disable-tree", "--disable-local")
        self.assertEqual(len(report["aucs"]), 5)


class SelftestTests(unittest.TestCase):

    def test_passes(self):
        lines = []
        self.assertEqual(run_selftest(out=lines.append), 0)
        self.assertTrue(lines[-1].startswith("all "))

    def test_broken_relu_backward_is_caught(self):
        lines = []
        with mock.patch("autograd.ops._relu_backward", lambda x, g: g):
            self.assertEqual(run_selftest(out=lines.append), 1)
        self.assertIn("gradient check: relu", lines[-1])

    def test_command(self):
        self.assertEqual(call("selftest")[0], 0)


if __name__ == "__main__":
    unittest.main()
