import csv
import json

import numpy as np
import pytest

from fastsvc.cli import main
from fastsvc.simulation import REPORT_COLUMNS


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


@pytest.fixture()
def sim_prefix(tmp_path):
    prefix = tmp_path / "sim"
    rc = main(["simulate", "--generator", "large", "--n", "250", "--k", "2",
               "--seed", "7", "--knots", "250", "--out", str(prefix)])
    assert rc == 0
    return prefix


def _read_table(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return header, data


class TestSimulate:
    def test_deterministic_files(self, tmp_path):
        args = ["simulate", "--generator", "large", "--n", "120", "--k", "2",
                "--seed", "3", "--knots", "120"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        for suffix in (".data.csv", ".truth.csv", ".meta.json"):
            assert (a.parent / (a.name + suffix)).read_bytes() == \
                   (b.parent / (b.name + suffix)).read_bytes()

    def test_meta_contents(self, sim_prefix):
        meta = json.loads((sim_prefix.parent / "sim.meta.json").read_text())
        assert meta["n"] == 250 and meta["k"] == 2 and meta["generator"] == "large"
        assert meta["true_sigma2"] > 0
        assert meta["alpha_by_column"] == [2.0, 0.5]


class TestFit:
    def test_surfaces_round_trip_full_precision(self, sim_prefix, tmp_path):
        out = tmp_path / "fitted"
        rc = main(["fit", "--input", str(sim_prefix) + ".data.csv", "--y", "y",
                   "--x", "x1", "--coords", "px,py", "--basis", "exact",
                   "--seed", "0", "--out", str(out)])
        assert rc == 0
        header, data = _read_table(str(out) + ".beta.csv")
        assert header == ["px", "py", "beta_intercept", "beta_x1"]

        # refit in-process on the reloaded table; surfaces must round-trip
        # bit for bit through the 17-digit CSV
        from fastsvc.model import FitOptions, SpatialDataset, fit

        dh, dd = _read_table(str(sim_prefix) + ".data.csv")
        X = np.column_stack([np.ones(dd.shape[0]), dd[:, dh.index("x1")]])
        ds = SpatialDataset(coords=dd[:, [dh.index("px"), dh.index("py")]],
                            y=dd[:, dh.index("y")], X=X,
                            svc_flags=np.ones(2, bool))
        res = fit(ds, FitOptions(basis="exact", seed=0))
        np.testing.assert_array_equal(data[:, 2:], res.beta_surfaces)

        summary = json.loads((tmp_path / "fitted.summary.json").read_text())
        assert summary["loglik"] == pytest.approx(res.loglik)
        assert summary["sigma2"] == pytest.approx(res.sigma2_hat)

    def test_svc_default_all_varying(self, sim_prefix, tmp_path):
        out = tmp_path / "fit2"
        rc = main(["fit", "--input", str(sim_prefix) + ".data.csv", "--y", "y",
                   "--x", "x1", "--coords", "px,py", "--basis", "exact",
                   "--out", str(out)])
        assert rc == 0
        summary = json.loads((tmp_path / "fit2.summary.json").read_text())
        assert set(summary["rho"]) == {"intercept", "x1"}

    def test_svc_subset(self, sim_prefix, tmp_path):
        # empty --svc keeps only the (always varying) intercept surface
        out = tmp_path / "fit3"
        rc = main(["fit", "--input", str(sim_prefix) + ".data.csv", "--y", "y",
                   "--x", "x1", "--svc", "", "--coords", "px,py",
                   "--basis", "exact", "--out", str(out)])
        assert rc == 0
        summary = json.loads((tmp_path / "fit3.summary.json").read_text())
        assert set(summary["rho"]) == {"intercept"}
        header, data = _read_table(str(out) + ".beta.csv")
        x1_col = data[:, header.index("beta_x1")]
        assert np.all(x1_col == x1_col[0])  # constant coefficient

    def test_missing_column_exit_2(self, sim_prefix, capsys):
        rc = main(["fit", "--input", str(sim_prefix) + ".data.csv", "--y", "y",
                   "--x", "x1", "--coords", "lon,lat"])
        assert rc == 2
        assert "lon" in capsys.readouterr().err

    def test_non_numeric_cell_exit_2(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        _write_csv(path, ["px", "py", "y", "x1"],
                   [[0, 0, 1.0, 2.0], [1, 1, "oops", 0.5], [2, 0, 1.0, 1.0],
                    [0, 2, 0.5, 0.1], [1, 2, 0.2, 0.9]])
        rc = main(["fit", "--input", str(path), "--y", "y", "--x", "x1",
                   "--coords", "px,py"])
        assert rc == 2
        err = capsys.readouterr().err
        assert "row 3" in err and "'y'" in err

    def test_too_few_rows_exit_2(self, tmp_path, capsys):
        path = tmp_path / "tiny.csv"
        _write_csv(path, ["px", "py", "y", "x1"],
                   [[0, 0, 1.0, 2.0], [1, 1, 0.5, 0.1], [2, 0, 1.0, 1.0]])
        rc = main(["fit", "--input", str(path), "--y", "y", "--x", "x1",
                   "--coords", "px,py"])
        assert rc == 2
        assert "rows" in capsys.readouterr().err

    def test_estimation_failure_exit_3(self, tmp_path, capsys):
        # duplicated covariate makes the penalized system singular
        rng = np.random.default_rng(0)
        rows = [[*rng.standard_normal(2), rng.standard_normal(), v, v]
                for v in rng.standard_normal(40)]
        path = tmp_path / "collinear.csv"
        _write_csv(path, ["px", "py", "y", "x1", "x2"], rows)
        rc = main(["fit", "--input", str(path), "--y", "y", "--x", "x1,x2",
                   "--coords", "px,py", "--basis", "exact"])
        assert rc == 3
        assert "Singular" in capsys.readouterr().err


class TestEigen:
    def test_export_round_trip_orthonormal(self, tmp_path):
        prefix = tmp_path / "pts"
        rc = main(["simulate", "--generator", "small", "--n", "100", "--k", "1",
                   "--seed", "1", "--out", str(prefix)])
        assert rc == 0
        out = tmp_path / "eig"
        rc = main(["eigen", "--input", str(prefix) + ".data.csv",
                   "--coords", "px,py", "--basis", "exact", "--out", str(out)])
        assert rc == 0
        header, vectors = _read_table(str(out) + ".vectors.csv")
        E = vectors[:, 2:]
        gram = E.T @ E
        np.testing.assert_allclose(gram, np.eye(E.shape[1]), atol=1e-8)
        vheader, values = _read_table(str(out) + ".values.csv")
        assert vheader == ["lambda"]
        assert values.shape[0] == E.shape[1]
        assert np.all(np.diff(values[:, 0]) <= 0) and values.min() > 0


class TestGwrCommand:
    def test_outputs(self, sim_prefix, tmp_path):
        out = tmp_path / "g"
        rc = main(["gwr", "--input", str(sim_prefix) + ".data.csv", "--y", "y",
                   "--x", "x1", "--coords", "px,py", "--bandwidth", "1.0",
                   "--out", str(out)])
        assert rc == 0
        summary = json.loads((tmp_path / "g.summary.json").read_text())
        assert summary["bandwidth"] == 1.0
        header, data = _read_table(str(out) + ".beta.csv")
        assert header == ["px", "py", "beta_intercept", "beta_x1"]
        assert np.isfinite(data).all()


class TestBenchmark:
    def test_row_count_and_schema(self, tmp_path):
        out = tmp_path / "report.csv"
        rc = main(["benchmark", "--methods", "msvc,gwr", "--n", "150,200",
                   "--k", "2", "--reps", "2", "--seed", "0",
                   "--gen-knots", "150", "--out", str(out)])
        assert rc == 0
        with open(out, newline="") as fh:
            rows = list(csv.reader(fh))
        # header + methods(2) x sizes(2) x reps(2) x alpha groups(2)
        assert len(rows) == 1 + 16
        assert rows[0] == list(REPORT_COLUMNS)

    def test_empty_methods(self, tmp_path):
        out = tmp_path / "empty.csv"
        rc = main(["benchmark", "--methods", "", "--n", "100", "--k", "2",
                   "--reps", "1", "--out", str(out)])
        assert rc == 0
        assert len(out.read_text().splitlines()) == 1
