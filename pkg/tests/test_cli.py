import json

import numpy as np
import pytest

from gpopt.cli import main
from gpopt.problems import (
    BRANIN_MINIMUM,
    PROBLEMS,
    SIX_HUMP_MINIMUM,
    branin,
    get_problem,
    schaffer_oracle_hypervolume,
    six_hump_camel,
)
from gpopt.report import ParseError, read_run_csv

QUICK = ["--budget", "2", "--init", "4", "--restarts", "1"]


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestProblems:
    def test_registry(self):
        assert set(PROBLEMS) == {"branin", "quadratic1d", "sixhump", "schaffer_mo", "schaffer_constrained"}

    def test_branin_minimum_on_dense_grid(self):
        g1, g2 = np.meshgrid(np.linspace(-5, 10, 1501), np.linspace(0, 15, 1501))
        vals = np.vectorize(lambda a, b: branin([a, b]))(g1, g2)
        assert vals.min() >= BRANIN_MINIMUM - 1e-9
        assert vals.min() == pytest.approx(BRANIN_MINIMUM, abs=1e-3)
        assert branin([np.pi, 2.275]) == pytest.approx(BRANIN_MINIMUM, abs=1e-12)

    def test_six_hump_minimum(self):
        assert six_hump_camel([0.0898, -0.7126]) == pytest.approx(SIX_HUMP_MINIMUM, abs=1e-4)

    def test_schaffer_constrained(self):
        p = get_problem("schaffer_constrained")
        y, c = p.objective([1.0, 0.7])
        np.testing.assert_allclose(y, [1.0, 1.0])
        np.testing.assert_allclose(c, [-0.2])
        assert tuple(p.reference) == (10.0, 10.0)

    def test_schaffer_oracle(self):
        # front f2 = (sqrt(f1) - 2)^2 on f1 in [0, 4]; the undominated area below it is 8/3
        exact = 100.0 - 8.0 / 3.0
        assert schaffer_oracle_hypervolume() == pytest.approx(exact, rel=1e-6)

    def test_unknown(self):
        from gpopt.errors import ConfigurationError

        with pytest.raises(ConfigurationError):
            get_problem("rosenbrock")


class TestDoe:
    def test_nine_points(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        code, stdout, _ = run(["doe", "--n", 9, "--dim", 2, "--bounds", "0:1,0:1", "--out", out], capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "x1,x2" and len(lines) == 10
        printed = float(stdout.split("min_distance:")[1].split()[0])
        assert printed == pytest.approx(np.sqrt(8) / 8, abs=1e-15)

    def test_single_point_is_midpoint(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        assert run(["doe", "--n", 1, "--dim", 2, "--bounds=-2:2,10:20", "--out", out], capsys)[0] == 0
        assert out.read_text().splitlines()[1] == "0,15"

    def test_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run(["doe", "--n", 17, "--dim", 3, "--out", path], capsys)
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.parametrize("bounds", ["0:1", "0-1,0:1", "1:0,0:1", "a:b,0:1"])
    def test_bad_bounds(self, tmp_path, capsys, bounds):
        code, _, err = run(["doe", "--n", 4, "--dim", 2, "--bounds", bounds, "--out", tmp_path / "x.csv"], capsys)
        assert code == 2 and "error" in err

    def test_unwritable(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code, _, _ = run(["doe", "--n", 4, "--dim", 2, "--out", blocker / "sub" / "x.csv"], capsys)
        assert code == 2

    def test_output_dir_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("GPOPT_OUTPUT_DIR", str(tmp_path))
        assert run(["doe", "--n", 3, "--dim", 1], capsys)[0] == 0
        assert (tmp_path / "doe_n3_d1.csv").exists()


class TestRun:
    def test_row_count_and_schema(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        code, stdout, _ = run(["run", "--problem", "branin", "--acquisition", "ei", "--seed", 3, "--out", out] + QUICK, capsys)
        assert code == 0 and "final incumbent" in stdout
        table = read_run_csv(out)
        assert len(table.iteration) == 6
        assert list(table.phase) == ["init"] * 4 + ["bo"] * 2
        assert table.X.shape == (6, 2) and table.Y.shape == (6, 1) and table.C.shape == (6, 0)
        assert np.all(np.diff(table.progress) <= 0)
        assert table.meta["config"]["seed"] == 3
        header = [l for l in out.read_text().splitlines() if not l.startswith("#")][0]
        assert header == "iteration,phase,x_1,x_2,y_1,incumbent_or_hypervolume,elapsed_seconds"

    def test_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run(["run", "--problem", "sixhump", "--seed", 1, "--out", path] + QUICK, capsys)
        assert a.read_bytes() == b.read_bytes()

    def test_constrained_hypervolume_column(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, stdout, _ = run(
            ["run", "--problem", "schaffer_constrained", "--acquisition", "hvpoi", "--seed", 1, "--out", out,
             "--budget", "3", "--init", "6", "--restarts", "1"],
            capsys,
        )
        assert code == 0 and "hypervolume" in stdout
        table = read_run_csv(out)
        assert table.C.shape == (9, 1)
        assert np.all(np.diff(table.progress) >= 0)
        assert table.meta["config"]["acquisition"]["reference"] == [10.0, 10.0]

    def test_config_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"budget": 1, "initial_design_size": 3, "acquisition": {"kind": "LCB", "beta": 1.0}}))
        out = tmp_path / "r.csv"
        code, _, _ = run(["run", "--problem", "quadratic1d", "--config", cfg, "--beta", "3", "--out", out], capsys)
        assert code == 0
        table = read_run_csv(out)
        assert len(table.iteration) == 4
        assert table.meta["config"]["acquisition"] == {"kind": "LCB", "beta": 3.0, "pof_threshold": 0.0}

    def test_record_time(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        run(["run", "--problem", "quadratic1d", "--record-time", "--out", out] + QUICK, capsys)
        assert np.all(np.isfinite(read_run_csv(out).elapsed))
        plain = tmp_path / "p.csv"
        run(["run", "--problem", "quadratic1d", "--out", plain] + QUICK, capsys)
        assert np.all(np.isnan(read_run_csv(plain).elapsed))

    @pytest.mark.parametrize(
        "args",
        [
            ["--problem", "nope"],
            ["--problem", "branin", "--acquisition", "hvpoi"],
            ["--problem", "schaffer_mo", "--acquisition", "ei"],
            ["--problem", "branin", "--acquisition", "pof"],
            ["--problem", "branin", "--kernel", "linear"],
            ["--problem", "branin", "--config", "/nonexistent/c.json"],
        ],
    )
    def test_configuration_errors(self, tmp_path, capsys, args):
        out = tmp_path / "r.csv"
        code, _, err = run(["run", *args, "--out", out], capsys)
        assert code == 2 and err.startswith("error:")
        assert not out.exists()

    def test_bad_json(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text("{budget: 1")
        assert run(["run", "--problem", "branin", "--config", cfg], capsys)[0] == 2

    def test_evaluation_error_exit_code(self, tmp_path, capsys, monkeypatch):
        from gpopt import problems
        from gpopt.bo import Objective

        bad = problems.Problem(
            "bad", problems.PROBLEMS["quadratic1d"].domain, Objective(lambda x: np.nan), None
        )
        monkeypatch.setitem(problems.PROBLEMS, "bad", bad)
        out = tmp_path / "r.csv"
        code, _, err = run(["run", "--problem", "bad", "--out", out] + QUICK, capsys)
        assert code == 3 and "non-finite" in err


class TestReport:
    def _run(self, tmp_path, capsys, problem, extra=()):
        out = tmp_path / f"{problem}.csv"
        run(["run", "--problem", problem, "--out", out, *QUICK, *extra], capsys)
        return out

    def test_convergence_markers(self, tmp_path, capsys):
        csv = self._run(tmp_path, capsys, "branin")
        svg = tmp_path / "b.svg"
        assert run(["report", csv, "--out", svg], capsys)[0] == 0
        text = svg.read_text()
        assert text.startswith("<svg") or text.startswith("<?xml")
        assert text.count('class="incumbent"') == 6

    def test_pareto_plot(self, tmp_path, capsys):
        csv = self._run(tmp_path, capsys, "schaffer_constrained", ["--acquisition", "hvpoi"])
        svg = tmp_path / "p.svg"
        assert run(["report", csv, "--out", svg], capsys)[0] == 0
        text = svg.read_text()
        table = read_run_csv(csv)
        n_feasible = int(np.sum(table.C[:, 0] <= 0))
        assert text.count('class="sample"') == n_feasible
        assert 'class="front"' in text

    def test_no_feasible(self, tmp_path, capsys):
        csv = self._run(tmp_path, capsys, "schaffer_constrained", ["--acquisition", "hvpoi"])
        lines = csv.read_text().splitlines()
        # force every constraint value positive
        body = []
        for line in lines:
            if line.startswith("#") or line.startswith("iteration"):
                body.append(line)
                continue
            cells = line.split(",")
            cells[6] = "1"
            body.append(",".join(cells))
        bad = tmp_path / "infeasible.csv"
        bad.write_text("\n".join(body) + "\n")
        svg = tmp_path / "n.svg"
        assert run(["report", bad, "--out", svg], capsys)[0] == 0
        assert "no feasible samples" in svg.read_text()

    def test_report_of_report(self, tmp_path, capsys):
        csv = self._run(tmp_path, capsys, "quadratic1d")
        svg = tmp_path / "q.svg"
        run(["report", csv, "--out", svg], capsys)
        code, _, err = run(["report", svg, "--out", tmp_path / "again.svg"], capsys)
        assert code == 2 and "line" in err

    def test_malformed_row_has_line_number(self, tmp_path, capsys):
        csv = self._run(tmp_path, capsys, "quadratic1d")
        lines = csv.read_text().splitlines()
        idx = len(lines) - 2
        lines[idx] = lines[idx].replace(",", ";", 1)
        csv.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as info:
            read_run_csv(csv)
        assert info.value.line == idx + 1

    def test_missing_input(self, tmp_path, capsys):
        assert run(["report", tmp_path / "none.csv"], capsys)[0] == 2
