import json

import pytest

from glmcompress import __version__
from glmcompress.cli import main
from glmcompress.ensemble import Ensemble
from glmcompress.glm import BINOMIAL
from glmcompress.synthetic import planted_dataset

from conftest import FIG2_NAMES, make_fit


def write_csv(path, dataset):
    header = ",".join(dataset.feature_names + ("y",))
    rows = [
        ",".join(repr(float(v)) for v in row) + f",{int(y)}"
        for row, y in zip(dataset.features, dataset.outcome)
    ]
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    ds = planted_dataset(n_obs=60, n_features=6, effect=2.0, seed=2)
    return write_csv(tmp_path_factory.mktemp("data") / "syn.csv", ds)


def run(*argv):
    return main([str(a) for a in argv])


def read_all(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


class TestFit:
    @pytest.mark.parametrize("bags", [1, 100])
    def test_bag_count(self, tmp_path, data_csv, bags):
        assert run("fit", "--data", data_csv, "--outcome", "y", "--bags", bags, "--seed", 7, "--out", tmp_path) == 0
        ens = json.loads((tmp_path / "ensemble.json").read_text())
        assert len(ens["models"]) == bags
        S = (tmp_path / "S.csv").read_text().splitlines()
        assert S[0].startswith("# ")
        assert len(S) == 2 + bags

    def test_rerun_byte_identical(self, tmp_path, data_csv):
        for sub in ("a", "b"):
            run("fit", "--data", data_csv, "--outcome", "y", "--bags", 10, "--seed", 3, "--out", tmp_path / sub)
        assert read_all(tmp_path / "a") == read_all(tmp_path / "b")

    def test_meta_embedded(self, tmp_path, data_csv):
        run("fit", "--data", data_csv, "--outcome", "y", "--bags", 3, "--seed", 5, "--out", tmp_path)
        meta = json.loads((tmp_path / "ensemble.json").read_text())["meta"]
        assert meta["version"] == __version__
        assert meta["seed"] == 5
        assert meta["config"]["bags"] == 3
        comment = json.loads((tmp_path / "B.csv").read_text().splitlines()[0][2:])
        assert comment == meta

    def test_bad_outcome_exit_code(self, tmp_path, data_csv, capsys):
        assert run("fit", "--data", data_csv, "--outcome", "nope", "--out", tmp_path) == 1
        assert "error" in capsys.readouterr().err
        assert not (tmp_path / "ensemble.json").exists()


@pytest.fixture(scope="module")
def fitted(tmp_path_factory, data_csv):
    out = tmp_path_factory.mktemp("fit")
    assert run("fit", "--data", data_csv, "--outcome", "y", "--bags", 20, "--seed", 1, "--out", out) == 0
    return out / "ensemble.json"


class TestCompress:
    def test_both(self, tmp_path, fitted):
        assert run("compress", "--ensemble", fitted, "--strategy", "both", "--out", tmp_path) == 0
        assert sorted(p.name for p in tmp_path.iterdir()) == [
            "compressed_centroid.json",
            "compressed_medoid.json",
            "costs.csv",
        ]
        costs = [ln for ln in (tmp_path / "costs.csv").read_text().splitlines() if not ln.startswith("#")]
        assert costs[0].split(",")[:2] == ["k", "cost"]
        assert len(costs) == 1 + 20

    def test_k_override(self, tmp_path, fitted):
        assert run("compress", "--ensemble", fitted, "--strategy", "medoid", "--k", 2, "--out", tmp_path) == 0
        comp = json.loads((tmp_path / "compressed_medoid.json").read_text())
        assert comp["k"] == 2
        assert len(comp["clusters"]) == 2
        assert sum(c["size"] for c in comp["clusters"]) == 20

    def test_k_out_of_range(self, tmp_path, fitted):
        assert run("compress", "--ensemble", fitted, "--strategy", "medoid", "--k", 21, "--out", tmp_path) == 1

    def test_fig2_scale_fixture(self, tmp_path):
        a = make_fit([0], [0.081], [0.0027], ["A"])
        b = make_fit([1, 2], [0.4358, 0.1917], [0.9990, 0.9999], ["B", "C"])
        ens = Ensemble((a, b, a, b, a, b), FIG2_NAMES, BINOMIAL)
        path = tmp_path / "e.json"
        path.write_text(json.dumps(ens.to_dict()))
        assert run("compress", "--ensemble", path, "--strategy", "medoid", "--out", tmp_path) == 0
        comp = json.loads((tmp_path / "compressed_medoid.json").read_text())
        assert comp["k"] == 2
        assert sum(len(c["representative"]["terms"]) for c in comp["clusters"]) == 3

    def test_missing_file(self, tmp_path):
        assert run("compress", "--ensemble", tmp_path / "none.json", "--out", tmp_path) == 1


@pytest.fixture(scope="module")
def five_csvs(tmp_path_factory):
    root = tmp_path_factory.mktemp("five")
    return [
        write_csv(root / f"ds{i}.csv", planted_dataset(n_obs=45, n_features=5, effect=1.0 + 0.3 * i, seed=i))
        for i in range(5)
    ]


EVAL_FLAGS = ("--outcome", "y", "--bags", 5, "--repeats", 1)


class TestEvaluate:
    def test_five_datasets(self, tmp_path, five_csvs):
        assert run("evaluate", "--data", *five_csvs, *EVAL_FLAGS, "--out", tmp_path) == 0
        lines = (tmp_path / "report.txt").read_text().splitlines()
        assert lines[0].startswith("# ")
        table = lines[1:]
        assert table[0].split() == [f"ds{i}" for i in range(5)] + ["P-value"]
        assert [ln.split()[0] for ln in table[1:]] == ["full", "medoid-compressed", "centroid-compressed"]
        assert all(len(ln.split()) == 7 for ln in table[1:])
        report = json.loads((tmp_path / "report.json").read_text())
        assert set(report["pValues"]) == {"medoid", "centroid"}

    def test_one_dataset_warns(self, tmp_path, five_csvs, capsys):
        assert run("evaluate", "--data", five_csvs[0], *EVAL_FLAGS, "--out", tmp_path) == 0
        assert "warning" in capsys.readouterr().err
        assert "P-value" not in (tmp_path / "report.txt").read_text()

    def test_seeded_rerun_identical(self, tmp_path, data_csv):
        flags = ("--outcome", "y", "--bags", 5, "--repeats", 3, "--folds", 3, "--seed", 11)
        for sub in ("a", "b"):
            assert run("evaluate", "--data", data_csv, *flags, "--out", tmp_path / sub) == 0
        assert read_all(tmp_path / "a") == read_all(tmp_path / "b")


class TestPipeline:
    def test_threads_do_not_change_outputs(self, tmp_path, data_csv):
        flags = ("--data", data_csv, "--outcome", "y", "--bags", 8, "--repeats", 1, "--seed", 4)
        assert run("pipeline", *flags, "--threads", 1, "--out", tmp_path / "t1") == 0
        assert run("pipeline", *flags, "--threads", 4, "--out", tmp_path / "t4") == 0
        a, b = read_all(tmp_path / "t1"), read_all(tmp_path / "t4")
        assert set(a) == {
            "B.csv", "S.csv", "ensemble.json", "costs.csv",
            "compressed_medoid.json", "compressed_centroid.json", "report.json", "report.txt",
        }
        assert a == b


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
