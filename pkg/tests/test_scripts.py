import unittest
import csv
import math
import json
import shutil
import tempfile
from io import StringIO
from pathlib import Path
from importlib.resources import files
from unittest.mock import patch
from nmqed import scripts
from nmqed.config import available_presets
from nmqed.runner import RunOptions


CONFIGS = Path(__file__).parent / "configs"


class TestScripts(unittest.TestCase):

    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.test_path = Path(self.test_dir)

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    @patch("sys.stdout", new_callable=StringIO)
    def test_list(self, mock_stdout):
        self.assertEqual(scripts.main(["preset", "--list"]), 0)
        self.assertEqual(mock_stdout.getvalue().split(), available_presets())
        self.assertEqual(scripts.main(["preset"]), 0)

    @patch("sys.stdout", new_callable=StringIO)
    def test_preset(self, mock_stdout):
        first = self.test_path / "first"
        second = self.test_path / "second"
        rc = scripts.main(["preset", "fig4", "--out", str(first)])
        self.assertEqual(rc, 0)
        self.assertEqual(scripts.main(["preset", "fig4", "--out",
                                       str(second)]), 0)
        output = mock_stdout.getvalue()
        self.assertIn(f"Results written to '{first}':", output)
        self.assertIn("fig4_photon_map.csv", output)
        self.assertIn("manifest.json", output)
        for name in ("fig4_population.csv", "fig4_photon_map.csv"):
            self.assertEqual((first / name).read_bytes(),
                             (second / name).read_bytes())
        manifest = json.loads((first / "manifest.json").read_text())
        self.assertEqual(manifest["source"], "preset:fig4")

        config = self.test_path / "fig4.json"
        shutil.copyfile(str(files("nmqed") / "presets" / "fig4.json"), config)
        third = self.test_path / "third"
        self.assertEqual(scripts.main(["run", str(config), "--out",
                                       str(third)]), 0)
        for name in ("fig4_population.csv", "fig4_photon_map.csv"):
            self.assertEqual((first / name).read_bytes(),
                             (third / name).read_bytes())

    @patch("sys.stdout", new_callable=StringIO)
    def test_fig1b(self, mock_stdout):
        rc = scripts.main(["preset", "fig1b", "--out", str(self.test_path)])
        self.assertEqual(rc, 0)
        for beta in ("0.2", "0.5", "0.8"):
            path = self.test_path / f"beta{beta}_population.csv"
            with open(path, encoding="utf-8", newline="") as f:
                rows = list(csv.DictReader(f))
            self.assertEqual(len(rows), 10001)
            row = rows[2000]
            self.assertAlmostEqual(float(row["P_ref"]), math.exp(-2.0))
        with open(self.test_path / "rates.csv", encoding="utf-8",
                  newline="") as f:
            gamma = [float(r["gamma_fit"]) for r in csv.DictReader(f)]
        self.assertEqual(gamma, sorted(gamma, reverse=True))
        self.assertTrue(all(g < 1.0 for g in gamma))
        self.assertIn("beta0.8_fits.csv", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=StringIO)
    def test_rates(self, mock_stdout):
        rc = scripts.main(["preset", "rates", "--out", str(self.test_path),
                           "--jobs", "4"])
        self.assertEqual(rc, 0)
        self.assertIn("rates.csv", mock_stdout.getvalue())
        with open(self.test_path / "rates.csv", encoding="utf-8",
                  newline="") as f:
            rates = list(csv.DictReader(f))
        self.assertEqual(len(rates), 12)
        for row in rates:
            beta = float(row["beta"])
            gamma_fit = float(row["gamma_fit"])
            if beta == 0:
                self.assertAlmostEqual(gamma_fit, 1.0, places=6)
                self.assertAlmostEqual(float(row["gamma_spectral"]), 1.0)
                self.assertAlmostEqual(float(row["gamma_eq5"]), 1.0)
            else:
                self.assertLess(gamma_fit, 1.0)
                self.assertLess(float(row["gamma_spectral"]), 1.0)

    @patch("sys.stdout", new_callable=StringIO)
    def test_unknown_preset(self, mock_stdout):
        rc = scripts.run_preset("fig9", RunOptions(out=self.test_path))
        self.assertEqual(rc, 2)
        self.assertIn("Error: Unknown preset 'fig9'", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=StringIO)
    def test_accuracy_guard(self, mock_stdout):
        rc = scripts.main([
            "run", str(CONFIGS / "beta_sweep.json"),
            "--out", str(self.test_path), "--dt", "0.2"
        ])
        self.assertEqual(rc, 3)
        self.assertIn("Error: Accuracy guard", mock_stdout.getvalue())
        self.assertFalse((self.test_path / "manifest.json").exists())

    @patch("sys.stdout", new_callable=StringIO)
    def test_sweep(self, mock_stdout):
        rc = scripts.main([
            "sweep", str(CONFIGS / "beta_sweep.json"),
            "--out", str(self.test_path), "--format", "ndjson", "--jobs", "2"
        ])
        self.assertEqual(rc, 0)
        with open(self.test_path / "rates.ndjson", encoding="utf-8") as f:
            rates = [json.loads(line) for line in f]
        self.assertEqual([r["beta"] for r in rates], [0.2, 0.5, 0.8])
        gamma = [r["gamma_fit"] for r in rates]
        self.assertEqual(gamma, sorted(gamma, reverse=True))
        self.assertTrue(all(g < 1.0 for g in gamma))
        self.assertIn("rates.ndjson", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=StringIO)
    def test_sweep_without_section(self, mock_stdout):
        rc = scripts.main([
            "sweep", str(CONFIGS / "wave_packet.json"),
            "--out", str(self.test_path)
        ])
        self.assertEqual(rc, 2)
        self.assertIn("no 'sweep' section found", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=StringIO)
    def test_overrides(self, mock_stdout):
        rc = scripts.main([
            "run", str(CONFIGS / "beta_sweep.json"),
            "--out", str(self.test_path), "--t-max", "6",
            "--fit-window", "3,6"
        ])
        self.assertEqual(rc, 0)
        manifest = json.loads(
            (self.test_path / "manifest.json").read_text(encoding="utf-8")
        )
        self.assertEqual(manifest["config"]["t_max"], 6.0)
        self.assertNotIn("t_max_T", manifest["config"])
        self.assertEqual(manifest["runs"][0]["fit_window"], [3.0, 6.0])
        self.assertIn("Results written to", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=StringIO)
    def test_rerun_manifest(self, mock_stdout):
        first = self.test_path / "first"
        second = self.test_path / "second"
        config = str(CONFIGS / "beta_sweep.json")
        self.assertEqual(scripts.main(["run", config, "--out", str(first)]), 0)
        rc = scripts.main([
            "run", str(first / "manifest.json"), "--out", str(second)
        ])
        self.assertEqual(rc, 0)
        self.assertEqual((first / "rates.csv").read_bytes(),
                         (second / "rates.csv").read_bytes())
        self.assertIn("Results written to", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=StringIO)
    def test_config_errors(self, mock_stdout):
        broken = self.test_path / "broken.json"
        broken.write_text('{"model": "two_atom",\n"outputs": 3}\n',
                          encoding="utf-8")
        self.assertEqual(scripts.main(["run", str(broken)]), 2)
        self.assertIn(f"{broken}:2: outputs: ",
                      mock_stdout.getvalue())
        missing = self.test_path / "missing.json"
        self.assertEqual(scripts.main(["run", str(missing)]), 4)
        self.assertEqual(scripts.main([
            "run", str(CONFIGS / "beta_sweep.json"), "--jobs", "0"
        ]), 2)
        self.assertIn("--jobs must be at least 1", mock_stdout.getvalue())

    @patch("sys.stdout", new_callable=StringIO)
    def test_unwritable_directory(self, mock_stdout):
        blocker = self.test_path / "file"
        blocker.write_text("", encoding="utf-8")
        rc = scripts.main([
            "run", str(CONFIGS / "beta_sweep.json"),
            "--out", str(blocker / "results")
        ])
        self.assertEqual(rc, 4)
        self.assertIn("Cannot create the output directory",
                      mock_stdout.getvalue())

    @patch("sys.stderr", new_callable=StringIO)
    def test_bad_arguments(self, mock_stderr):
        for argv in (
            ["run", "config.json", "--fit-window", "3"],
            ["run", "config.json", "--fit-window", "6,3"],
            ["run", "config.json", "--dt", "-1"],
            ["run", "config.json", "--format", "xml"],
            [],
        ):
            with self.assertRaises(SystemExit) as ctx:
                scripts.main(argv)
            self.assertEqual(ctx.exception.code, 2)
        self.assertIn("usage: nmqed", mock_stderr.getvalue())

    @patch("nmqed.scripts.logging.basicConfig")
    @patch("sys.stdout", new_callable=StringIO)
    def test_verbose(self, mock_stdout, mock_logging):
        scripts.main(["preset", "--list", "-vv"])
        mock_logging.assert_called_once()
        self.assertEqual(mock_logging.call_args.kwargs["level"], 10)
        self.assertIn("fig1b", mock_stdout.getvalue())


if __name__ == '__main__':
    unittest.main()
