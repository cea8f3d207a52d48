"""End-to-end tests for the charflow command line"""
import contextlib
import io
import json
import os
import unittest
from pathlib import Path
from unittest import mock

from charflow.cli import EXIT_INTERNAL, EXIT_OK, EXIT_USER, build_parser, main
from charflow.tests.conftest import TempWorkspace, fresh_config, quadratic_spec, write_measure_file, write_spec


def run_cli(*argv):
    """Run main() and capture (exit code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


def printed(stdout: str) -> dict:
    fields = {}
    for line in stdout.splitlines():
        key, _, value = line.partition(": ")
        fields[key] = value
    return fields


class CLITestCase(unittest.TestCase):
    def setUp(self):
        self.workspace = TempWorkspace()
        self.temp_dir = self.workspace.__enter__()
        self.env = mock.patch.dict(os.environ, {"CHARFLOW_LOG_DIR": os.path.join(self.temp_dir, "logs")})
        self.env.start()
        fresh_config()

    def tearDown(self):
        self.env.stop()
        self.workspace.__exit__(None, None, None)

    def out_dir(self, name: str = "out") -> str:
        return os.path.join(self.temp_dir, name)


class TestParser(CLITestCase):
    def test_subcommands(self):
        parser = build_parser()
        args = parser.parse_args(["hamiltonian", "--spec", "s.yaml", "--x", "0", "--p", "1"])
        self.assertEqual(args.command, "hamiltonian")
        self.assertEqual(args.out, "charflow_out")
        args = parser.parse_args(["characteristics", "--spec", "s.yaml", "--seeds", "5", "7", "--T", "0.5"])
        self.assertEqual(args.seeds, [5, 7])
        self.assertEqual(args.T, 0.5)

    def test_usage_errors(self):
        code, _, _ = run_cli("explode", "--spec", "s.yaml")
        self.assertEqual(code, EXIT_USER)
        code, _, _ = run_cli("hamiltonian", "--x", "0", "--p", "1")
        self.assertEqual(code, EXIT_USER)

    def test_help(self):
        code, _, _ = run_cli("--help")
        self.assertEqual(code, EXIT_OK)


class TestHamiltonianCommand(CLITestCase):
    def test_unit_costate(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, stdout, _ = run_cli("hamiltonian", "--spec", spec, "--x", "0", "--p", "1")
        self.assertEqual(code, EXIT_OK)
        fields = printed(stdout)
        self.assertEqual(fields["value"], "0.5")
        self.assertEqual(fields["branch"], "closed_form")

    def test_wrong_vector_length(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, _, stderr = run_cli("hamiltonian", "--spec", spec, "--x", "0,1", "--p", "1")
        self.assertEqual(code, EXIT_USER)
        self.assertIn("Error:", stderr)


class TestSpecErrors(CLITestCase):
    def test_missing_file(self):
        code, _, stderr = run_cli("hjb", "--spec", os.path.join(self.temp_dir, "nope.yaml"), "--out", self.out_dir())
        self.assertEqual(code, EXIT_USER)
        self.assertIn("Error:", stderr)

    def test_malformed_yaml(self):
        path = Path(self.temp_dir) / "bad.yaml"
        path.write_text("dims: [1, \n  : :")
        code, _, _ = run_cli("hjb", "--spec", str(path), "--out", self.out_dir())
        self.assertEqual(code, EXIT_USER)

    def test_unknown_identifier(self):
        spec = write_spec(self.temp_dir, quadratic_spec(lagrangian="u0^2/2 + foo"))
        code, _, stderr = run_cli("hjb", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_USER)
        self.assertIn("foo", stderr)

    def test_missing_dynamics(self):
        data = quadratic_spec()
        del data["dynamics"]
        spec = write_spec(self.temp_dir, data)
        code, _, _ = run_cli("hjb", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_USER)


class TestCharacteristicsCommand(CLITestCase):
    def test_focusing_caustic(self):
        spec = write_spec(self.temp_dir, quadratic_spec(initial="-x0^2/2"))
        code, stdout, _ = run_cli("characteristics", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_OK)
        t_star = float(printed(stdout)["caustic_time"])
        self.assertGreaterEqual(t_star, 0.95)
        self.assertLessEqual(t_star, 1.0)
        self.assertTrue(os.path.exists(os.path.join(self.out_dir(), "trajectories.csv")))
        with open(os.path.join(self.out_dir(), "characteristics.json")) as f:
            self.assertEqual(json.load(f)["schema"], 1)

    def test_empty_seed_list(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, _, stderr = run_cli("characteristics", "--spec", spec, "--out", self.out_dir(), "--seeds")
        self.assertEqual(code, EXIT_USER)
        self.assertIn("seed list is empty", stderr)

    def test_zero_horizon(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, stdout, _ = run_cli("characteristics", "--spec", spec, "--out", self.out_dir(), "--T", "0")
        self.assertEqual(code, EXIT_OK)
        fields = printed(stdout)
        self.assertEqual(float(fields["caustic_time"]), 0.0)
        self.assertEqual(fields["stamps"], "1")


class TestHJBCommand(CLITestCase):
    def test_quadratic_oracle_error(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, stdout, _ = run_cli("hjb", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_OK)
        self.assertLessEqual(float(printed(stdout)["oracle_sup_error"]), 1e-2)
        self.assertTrue(os.path.exists(os.path.join(self.out_dir(), "value_grid.csv")))

    def test_zero_data(self):
        spec = write_spec(self.temp_dir, quadratic_spec(initial="0"))
        code, _, _ = run_cli("hjb", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_OK)
        with open(os.path.join(self.out_dir(), "value_grid.csv")) as f:
            rows = f.read().strip().splitlines()
        self.assertEqual(rows[0], "t,x0,V")
        self.assertTrue(all(float(r.split(",")[-1]) == 0.0 for r in rows[1:]))

    def test_cfl_violation(self):
        spec = write_spec(self.temp_dir, quadratic_spec(grid={"nodes": [301], "dt": 0.05}))
        code, _, stderr = run_cli("hjb", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_USER)
        self.assertIn("CFL", stderr)


class TestTransportCommand(CLITestCase):
    def test_three_atom_shift(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, stdout, _ = run_cli("transport", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_OK)
        fields = printed(stdout)
        self.assertAlmostEqual(float(fields["primal"]), 0.125, places=12)
        self.assertLessEqual(float(fields["gap"]), 1e-8)
        self.assertEqual(fields["deterministic_plan"], "true")
        for name in ("cost_matrix.csv", "plan.csv", "pairs.csv", "monge_map.csv", "pushforward.csv", "transport.json"):
            self.assertTrue(os.path.exists(os.path.join(self.out_dir(), name)), name)

    def test_identical_measures(self):
        atoms = {"atoms": [[0.0], [1.0], [2.0]]}
        spec = write_spec(self.temp_dir, quadratic_spec(measures={"mu0": atoms, "mu1": atoms}))
        code, stdout, _ = run_cli("transport", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_OK)
        fields = printed(stdout)
        self.assertEqual(float(fields["primal"]), 0.0)
        self.assertLessEqual(float(fields["gap"]), 1e-12)
        self.assertLessEqual(float(fields["pushforward_W1"]), 1e-9)

    def test_measure_files_override_spec(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        mu0 = write_measure_file(self.temp_dir, [0.0], [1.0], "mu0.csv")
        mu1 = write_measure_file(self.temp_dir, [1.0, 2.0], [0.5, 0.5], "mu1.csv")
        code, _, stderr = run_cli("transport", "--spec", spec, "--out", self.out_dir(), "--mu0", mu0, "--mu1", mu1)
        # the single source atom splits its mass, so the Monge section cannot resolve it
        self.assertEqual(code, EXIT_INTERNAL)
        self.assertIn("Error:", stderr)
        with open(os.path.join(self.out_dir(), "plan.csv")) as f:
            self.assertEqual(len(f.read().strip().splitlines()), 3)

    def test_unreachable_targets(self):
        data = quadratic_spec(
            control={"lo": [-0.1], "hi": [0.1]},
            measures={"mu0": {"atoms": [[0.0]]}, "mu1": {"atoms": [[2.0]]}},
            transport={"t1": 1.0, "dt": 0.01, "policy": "shooting"},
        )
        spec = write_spec(self.temp_dir, data)
        code, _, stderr = run_cli("transport", "--spec", spec, "--out", self.out_dir())
        self.assertEqual(code, EXIT_USER)
        self.assertIn("infeasible", stderr)

    def test_reruns_are_byte_identical(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        self.assertEqual(run_cli("transport", "--spec", spec, "--out", self.out_dir("a"))[0], EXIT_OK)
        self.assertEqual(run_cli("transport", "--spec", spec, "--out", self.out_dir("b"), "--threads", "3")[0], EXIT_OK)
        for name in ("cost_matrix.csv", "plan.csv", "pairs.csv", "monge_map.csv", "transport.json"):
            first = Path(self.out_dir("a"), name).read_bytes()
            second = Path(self.out_dir("b"), name).read_bytes()
            self.assertEqual(first, second, name)


class TestValidateCommand(CLITestCase):
    def test_quadratic_passes(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, stdout, _ = run_cli("validate", "--spec", spec, "--samples", "200")
        self.assertEqual(code, EXIT_OK)
        fields = printed(stdout)
        self.assertEqual(fields["passed"], "true")
        self.assertEqual(float(fields["K1"]), 0.0)
        self.assertEqual(fields["L3"], "not checked")

    def test_too_few_samples(self):
        spec = write_spec(self.temp_dir, quadratic_spec())
        code, _, _ = run_cli("validate", "--spec", spec, "--samples", "10")
        self.assertEqual(code, EXIT_USER)


if __name__ == "__main__":
    unittest.main()
