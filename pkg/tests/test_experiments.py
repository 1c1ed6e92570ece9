"""
Tests for experiment configs, writers, the voltube command and run history

Covers:
- Config parsing: defaults, overrides, closed family registry, config hash
- CSV/JSON writers and the metadata header
- voltube subcommands end to end through call_command
- The wings oracle comparison and its known deviations
- Byte-identical CSV output for different worker counts
- Exit codes 2 (config), 3 (hypotheses) and 4 (numerical failure)
- --allow-unverified metadata and --save persistence
- Run history filtering
"""
import json
import tempfile
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from lsv.exceptions import ConfigError
from lsv.models import ExperimentRun
from lsv.services import heston_oracle as oracle
from lsv.services.estimate import GRID_RESTRICTED
from lsv.services.experiments import parse_config
from lsv.services.experiments.history import LIMIT_HARD_CAP, get_run_history
from lsv.services.experiments.writers import format_value, read_csv, write_csv, write_json

HESTON_PARAMS = {"kappa": 1.0, "theta": 0.09, "xi": 0.3, "rho": -0.5, "V0": 0.09, "T": 1.0}
SMALL_CHUNKS = dict(settings.VOLTUBE, CHUNK_PATHS=512)


def _config(run=None, targets=None, **model):
    data = {"model": {"family": "heston", "params": dict(HESTON_PARAMS)}}
    data["model"].update(model)
    data["run"] = {"n_paths": 1000, "n_steps": 20, "seed": 7}
    data["run"].update(run or {})
    if targets:
        data["targets"] = targets
    return data


def _write_config(directory, data):
    path = Path(directory) / "config.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _voltube(subcommand, config_path, out_dir, *extra):
    stdout = StringIO()
    call_command("voltube", subcommand, "--config", config_path, "--out", str(out_dir), *extra, stdout=stdout)
    return stdout.getvalue()


class ConfigParsingTest(SimpleTestCase):
    """
    Test suite for parse_config.

    Verifies that:
    1. Omitted sections take serializer defaults
    2. Command-line overrides win and are recorded
    3. Unknown families and parameters raise ConfigError
    4. The config hash ignores the output location but not the seed
    """

    def test_defaults(self):
        config = parse_config({"model": {"family": "heston", "params": HESTON_PARAMS}})
        self.assertEqual(config.run["n_paths"], 100_000)
        self.assertEqual(config.run["scheme"], "euler_full_truncation")
        self.assertEqual(config.run["estimator"], GRID_RESTRICTED)
        self.assertEqual(config.targets["scaling_p"], [1, 2])
        self.assertEqual(config.output["formats"], ["csv", "json"])
        self.assertEqual(config.C2, 1.0)
        self.assertEqual(config.build_spec().family, "heston")

    def test_overrides(self):
        config = parse_config(_config(), overrides={"seed": 99, "n_paths": 10, "n_steps": None})
        self.assertEqual(config.seed, 99)
        self.assertEqual(config.run["n_paths"], 10)
        self.assertEqual(config.run["n_steps"], 20)
        self.assertEqual(config.overrides, {"seed": 99, "n_paths": 10})
        with self.assertRaises(ConfigError):
            parse_config(_config(), overrides={"n_paths": 0})

    def test_closed_registry(self):
        with self.assertRaises(ConfigError):
            parse_config({"model": {"family": "sabr", "params": {}}})
        with self.assertRaises(ConfigError):
            parse_config({"model": {"family": "heston", "params": dict(HESTON_PARAMS, nu=1.0)}})
        with self.assertRaises(ConfigError):
            parse_config({"model": {"family": "heston", "params": dict(HESTON_PARAMS, rho=1.5)}})

    def test_invalid_custom_bounds(self):
        with self.assertRaises(ConfigError):
            parse_config(_config(custom_bounds={"C2": -1.0}))
        with self.assertRaises(ConfigError):
            parse_config(_config(custom_bounds={"K": 0.5}))

    def test_config_hash(self):
        base = parse_config(_config())
        moved = _config()
        moved["output"] = {"directory": "/elsewhere"}
        self.assertEqual(base.config_hash, parse_config(moved).config_hash)
        self.assertNotEqual(base.config_hash, parse_config(_config(run={"seed": 8})).config_hash)
        self.assertEqual(len(base.config_hash), 64)


class WritersTest(SimpleTestCase):
    """Tests for the CSV and JSON writers."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_format_value(self):
        self.assertEqual(format_value(None), "")
        self.assertEqual(format_value(True), "true")
        self.assertEqual(format_value(3), "3")
        self.assertEqual(format_value(0.1), "0.10000000000000001")
        self.assertEqual(format_value(float("nan")), "nan")
        self.assertEqual(format_value(float("-inf")), "-inf")

    def test_csv_round_trip(self):
        path = write_csv(self.dir / "t.csv", ["y", "p"], [[1.0, 0.5], [2.0, None]], {"seed": 3, "b": [1, 2]})
        text = path.read_text(encoding="utf-8")
        self.assertTrue(text.startswith("# b=[1,2]\n# seed=3\ny,p\n"))
        meta, header, rows = read_csv(path)
        self.assertEqual(meta, {"b": [1, 2], "seed": 3})
        self.assertEqual(header, ["y", "p"])
        self.assertEqual(rows, [["1", "0.5"], ["2", ""]])

    def test_json_meta_and_non_finite(self):
        path = write_json(self.dir / "t.json", {"value": float("inf")}, {"seed": 1})
        document = json.loads(path.read_text(encoding="utf-8"))
        self.assertEqual(document["meta"], {"seed": 1})
        self.assertEqual(document["value"], "inf")


class VoltubeCommandTest(SimpleTestCase):
    """
    Test suite for the voltube management command.

    Verifies that:
    1. Each subcommand writes its artifacts with the run metadata
    2. Tube CSVs are byte-identical for 1 and 3 workers
    3. Oracle columns in tails equal the oracle tail
    4. Failures map to exit codes 2, 3 and 4
    5. --allow-unverified embeds the violations
    """

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _run(self, subcommand, data, *extra, out="out"):
        _voltube(subcommand, _write_config(self.dir, data), self.dir / out, *extra)
        return self.dir / out

    def test_constants(self):
        out = self._run("constants", _config())
        self.assertFalse((out / "constants.csv").exists())
        document = json.loads((out / "constants.json").read_text(encoding="utf-8"))
        self.assertIn("log_Q", document["constants"])
        self.assertIn("y_threshold", document["thresholds"])
        self.assertEqual(document["thresholds"]["small_ball"], 16.0)
        self.assertIn("log_right", document["wing_floors"])
        self.assertTrue(document["meta"]["hypotheses"]["passed"])
        self.assertEqual(document["meta"]["seed"], 7)
        self.assertEqual(len(document["meta"]["spec_hash"]), 64)

    @override_settings(VOLTUBE=SMALL_CHUNKS)
    def test_tube_independent_of_workers(self):
        data = _config(run={"n_paths": 2000}, targets={"y_list": [0.3, 0.5, 1.0]})
        one = self._run("tube", data, "--workers", "1", out="one")
        three = self._run("tube", data, "--workers", "3", out="three")
        self.assertEqual((one / "tube.csv").read_bytes(), (three / "tube.csv").read_bytes())

        meta, header, rows = read_csv(one / "tube.csv")
        self.assertEqual(meta["chunk_paths"], 512)
        self.assertEqual(header[:3], ["y", "p_hat", "ci_low"])
        self.assertEqual([float(r[0]) for r in rows], [0.5, 1.0])
        summary = json.loads((one / "tube.json").read_text(encoding="utf-8"))
        self.assertEqual(summary["skipped"][0]["y"], 0.3)

    def test_tails_oracle_columns(self):
        data = _config(run={"n_paths": 2000}, targets={"y_list": [0.1, 0.2, 2.5]})
        out = self._run("tails", data)
        _, header, rows = read_csv(out / "tails.csv")
        params = oracle.HestonParams(**HESTON_PARAMS)
        right, left = header.index("oracle_right"), header.index("oracle_left")
        bound = header.index("cdf_log_bound")
        for row in rows:
            y = float(row[0])
            self.assertEqual(float(row[right]), oracle.tail(params, y))
            self.assertEqual(float(row[left]), oracle.left_tail(params, y))
        # the CDF bound needs y above both thresholds
        self.assertEqual(rows[0][bound], "")
        self.assertNotEqual(rows[2][bound], "")

    def test_other_subcommands(self):
        cases = {
            "curves": {"y_list": [0.3, 1.0], "curve_steps": 50},
            "variational": {"y_list": [1.0], "knots": 50},
            "smallballs": {"y_list": [20.0], "j_list": [0, 1]},
            "wings": {"strikes": [-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6], "wing_k_min": 0.2},
            "moments": {"p_list": [0.5, 1.0, 2.0]},
            "density": {"y_grid": [-0.5, 0.0, 0.5]},
        }
        for subcommand, targets in cases.items():
            with self.subTest(subcommand=subcommand):
                out = self._run(subcommand, _config(targets=targets), out=subcommand)
                meta, _, rows = read_csv(out / f"{subcommand}.csv")
                self.assertEqual(meta["subcommand"], subcommand)
                self.assertTrue(rows)
                self.assertTrue((out / f"{subcommand}.json").exists())

    def test_wings_oracle_comparison(self):
        data = _config(targets={"strikes": [-0.4, -0.2, 0.0, 0.2, 0.4], "wing_k_min": 0.2})
        out = self._run("wings", data)
        comparison = json.loads((out / "wings.json").read_text(encoding="utf-8"))["oracle"]
        self.assertEqual(comparison["strikes"][0], -4.0)
        self.assertEqual(comparison["strikes"][-1], 4.0)
        self.assertTrue(comparison["right_within_band"])
        self.assertFalse(comparison["left_within_band"])
        self.assertTrue(comparison["consistent"])
        self.assertEqual(len(comparison["known_deviations"]), 1)
        self.assertTrue(comparison["known_deviations"][0].startswith("left wing"))

    def test_save_paths(self):
        data = _config(run={"n_paths": 50}, targets={"y_list": [0.5]})
        self._run("tails", data, "--save-paths", str(self.dir / "paths.vtb"))
        self.assertEqual((self.dir / "paths.vtb").read_bytes()[:4], b"VTB1")

    def test_config_error_exit_code(self):
        with self.assertRaises(CommandError) as ctx:
            self._run("constants", {"model": {"family": "sabr", "params": {}}})
        self.assertEqual(ctx.exception.returncode, 2)
        with self.assertRaises(CommandError) as ctx:
            _voltube("constants", str(self.dir / "missing.json"), self.dir / "out")
        self.assertEqual(ctx.exception.returncode, 2)
        with self.assertRaises(CommandError) as ctx:
            self._run("tube", _config(targets={"y_list": [0.1]}))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_hypothesis_exit_code(self):
        data = _config(params=dict(HESTON_PARAMS, kappa=5.0), custom_bounds={"K": 1.5})
        with self.assertRaises(CommandError) as ctx:
            self._run("constants", data)
        self.assertEqual(ctx.exception.returncode, 3)

    def test_numerical_exit_code(self):
        data = _config(targets={"dt_list": [0.01, 0.02, 0.03]})
        with self.assertRaises(CommandError) as ctx:
            self._run("scaling", data)
        self.assertEqual(ctx.exception.returncode, 4)

    def test_allow_unverified(self):
        data = _config(params=dict(HESTON_PARAMS, kappa=5.0), custom_bounds={"K": 1.5})
        out = self._run("constants", data, "--allow-unverified")
        hypotheses = json.loads((out / "constants.json").read_text(encoding="utf-8"))["meta"]["hypotheses"]
        self.assertFalse(hypotheses["passed"])
        self.assertIn("violations", hypotheses)


class SaveRunTest(TestCase):
    """Tests for --save."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_saves_run(self):
        path = _write_config(self.dir, _config())
        _voltube("constants", path, self.dir / "out", "--save")
        run = ExperimentRun.objects.get()
        self.assertEqual(run.subcommand, "constants")
        self.assertEqual(run.family, "heston")
        self.assertEqual(run.status, "OK")
        self.assertEqual(run.seed, 7)
        self.assertIn("log_Q", run.summary["constants"])
        self.assertTrue(run.artifacts[0].endswith("constants.json"))

    def test_unverified_status(self):
        data = _config(params=dict(HESTON_PARAMS, kappa=5.0), custom_bounds={"K": 1.5})
        _voltube("constants", _write_config(self.dir, data), self.dir / "out", "--allow-unverified", "--save")
        self.assertEqual(ExperimentRun.objects.get().status, "UNVERIFIED")


def _make_run(**fields):
    values = dict(
        subcommand="tube", family="heston", config_hash="a" * 64, spec_hash="b" * 64, seed=0,
        n_paths=100, n_steps=10, scheme="euler_full_truncation", engine_version="1.0.0",
    )
    values.update(fields)
    return ExperimentRun.objects.create(**values)


class RunHistoryTest(TestCase):
    """
    Test suite for get_run_history.

    Verifies that:
    1. Runs come back newest first
    2. Filters narrow by subcommand, family and config-hash prefix
    3. limit is capped and non-positive values fall back to the default
    4. Summaries are only included on request
    """

    def setUp(self):
        self.first = _make_run()
        self.second = _make_run(subcommand="tails", config_hash="c" * 64)
        self.third = _make_run(family="bounded_skew_heston", summary={"x": 1})

    def test_order(self):
        result = get_run_history()
        self.assertEqual([r["id"] for r in result["runs"]], [self.third.pk, self.second.pk, self.first.pk])
        self.assertEqual(result["meta"]["total"], 3)

    def test_filters(self):
        self.assertEqual(get_run_history(subcommand="tails")["meta"]["total"], 1)
        self.assertEqual(get_run_history(family="bounded_skew_heston")["meta"]["total"], 1)
        self.assertEqual(get_run_history(config_hash="ccc")["runs"][0]["id"], self.second.pk)

    def test_limit(self):
        self.assertEqual(get_run_history(limit=1)["meta"]["count"], 1)
        self.assertEqual(get_run_history(limit=10_000)["meta"]["limit"], LIMIT_HARD_CAP)
        self.assertEqual(get_run_history(limit=0)["meta"]["count"], 3)

    def test_include_summary(self):
        self.assertNotIn("summary", get_run_history()["runs"][0])
        self.assertEqual(get_run_history(include_summary=True)["runs"][0]["summary"], {"x": 1})
