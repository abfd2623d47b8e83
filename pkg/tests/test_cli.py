import csv
import json
import subprocess
import sys

import pytest

from mlrank import cli, verify
from mlrank.dataio import read_sparse


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        assert first.startswith("# {")
        return json.loads(first[2:]), list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    argv = ["generate", "--m", "4", "--n-train", "200", "--n-test", "300", "--model-seed", "1", "--data-seed", "2"]
    assert cli.main(argv + ["--out-dir", str(out)]) == 0
    return out


class TestGenerate:
    def test_files_and_manifest(self, generated):
        manifest = json.loads((generated / "manifest.json").read_text())
        assert manifest["model"]["M_mode"] == "identity"
        assert read_sparse(generated / "train.txt").n == 200
        assert read_sparse(generated / "test.txt").n == 300
        assert "model_seed=1" in (generated / "train.txt").read_text()

    def test_byte_identical_reruns(self, generated, tmp_path):
        argv = ["generate", "--m", "4", "--n-train", "200", "--n-test", "300", "--model-seed", "1", "--data-seed", "2"]
        cli.main(argv + ["--out-dir", str(tmp_path)])
        for name in ("train.txt", "test.txt"):
            a, b = (generated / name).read_bytes(), (tmp_path / name).read_bytes()
            # provenance records the output directory; everything else matches
            strip = lambda raw: b"\n".join(l for l in raw.split(b"\n") if b"provenance" not in l)
            assert strip(a) == strip(b)

    def test_same_directory_rerun_is_identical(self, tmp_path):
        argv = ["generate", "--m", "3", "--n-train", "50", "--n-test", "20", "--dependent", "--out-dir", str(tmp_path)]
        cli.main(argv)
        first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
        cli.main(argv)
        assert first == {p.name: p.read_bytes() for p in tmp_path.iterdir()}
        assert json.loads(first["manifest.json"])["model"]["M_mode"] == "random"


class TestTrainEval:
    def test_grid_selection_trace(self, generated, tmp_path):
        model = tmp_path / "m.json"
        rc = cli.main(
            ["train", "--method", "wbr-logreg", "--grid", "0.01,1,100", "--train", str(generated / "train.txt"), "--model-out", str(model)]
        )
        assert rc == 0
        prov, rows = read_csv(f"{model}.tuning.csv")
        assert len(rows) == 3 and prov["selected"] in (0.01, 1.0, 100.0)
        losses = {float(r["lam"]): float(r["holdout_rank_loss"]) for r in rows}
        assert losses[prov["selected"]] == min(losses.values())
        assert json.loads(model.read_text())["provenance"]["method"] == "wbr-logreg"

    def test_single_value_grid_fits_directly(self, generated, tmp_path):
        model = tmp_path / "m.json"
        trace = tmp_path / "t.csv"
        argv = ["train", "--method", "wbr-ada", "--grid", "5", "--train", str(generated / "train.txt")]
        assert cli.main(argv + ["--model-out", str(model), "--trace-out", str(trace)]) == 0
        assert read_csv(trace)[1] == []

    def test_eval_outputs(self, generated, tmp_path, capsys):
        model = tmp_path / "m.json"
        cli.main(["train", "--method", "pairwise-stumps", "--grid", "10,20", "--train", str(generated / "train.txt"), "--model-out", str(model)])
        capsys.readouterr()
        out = tmp_path / "per.csv"
        rc = cli.main(["eval", "--model", str(model), "--data", str(generated / "train.txt"), "--out", str(out), "--rankings"])
        assert rc == 0
        printed = capsys.readouterr().out
        value = float(printed.split(":")[1])
        assert 0 <= value <= 1 and len(printed.split(".")[1].strip()) == 6
        _, rows = read_csv(out)
        assert len(rows) == 200
        assert sorted(rows[0]["ranking"].split()) == ["0", "1", "2", "3"]
        assert rows[0]["tie_broken"] in ("0", "1")

    def test_train_is_reproducible(self, generated, tmp_path):
        paths = []
        for k in range(2):
            model = tmp_path / f"m{k}.json"
            cli.main(["train", "--method", "pairwise-log", "--grid", "10,20", "--train", str(generated / "train.txt"), "--model-out", str(model), "--trace-out", str(tmp_path / "t.csv")])
            paths.append(json.loads(model.read_text()))
            paths[-1]["provenance"].pop("model_out")
        assert paths[0] == paths[1]


class TestExitCodes:
    def test_usage_errors(self, generated, tmp_path):
        assert cli.main(["train", "--method", "wbr-ada", "--grid", "0", "--train", str(generated / "train.txt"), "--model-out", str(tmp_path / "m")]) == 1
        with pytest.raises(SystemExit) as exc:
            cli.main(["train", "--method", "nope"])
        assert exc.value.code == 1
        with pytest.raises(SystemExit) as exc:
            cli.main([])
        assert exc.value.code == 1

    def test_data_errors(self, generated, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("#m=2 #d=2\n0 7:1\n")
        assert cli.main(["train", "--method", "wbr-ada", "--train", str(bad), "--model-out", str(tmp_path / "m")]) == 2
        assert cli.main(["train", "--method", "wbr-ada", "--train", str(tmp_path / "missing"), "--model-out", str(tmp_path / "m")]) == 2
        model = tmp_path / "m.json"
        cli.main(["train", "--method", "wbr-ada", "--grid", "5", "--train", str(generated / "train.txt"), "--model-out", str(model)])
        other = tmp_path / "other.txt"
        other.write_text("#m=2 #d=2\n0 0:1\n")
        assert cli.main(["eval", "--model", str(model), "--data", str(other)]) == 2

    def test_verify_failure(self, monkeypatch):
        monkeypatch.setattr(verify, "run_suite", lambda *a: verify.SuiteReport("identities", 1, 1, 1.0, 1e-12))
        assert cli.main(["verify", "--suite", "identities", "--trials", "1"]) == 3


class TestVerify:
    def test_identities_json(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        assert cli.main(["verify", "--suite", "identities", "--trials", "50", "--json", str(out)]) == 0
        summary = json.loads(out.read_text())
        assert summary["violations"] == 0 and summary["trials"] == 200 and summary["passed"]
        assert capsys.readouterr().out.startswith("[PASS] identities")

    def test_inconsistency_reports_witness(self, tmp_path):
        out = tmp_path / "v.json"
        assert cli.main(["verify", "--suite", "inconsistency", "--trials", "300", "--json", str(out)]) == 0
        d = json.loads(out.read_text())["details"]
        assert d["witnesses_found"] == 2
        for kind in ("exp", "log"):
            assert len(d[f"{kind}_violated_pair"]) == 2 and d[f"{kind}_sign_delta"] in (-1, 1)


def test_curve_rows(tmp_path):
    out = tmp_path / "curve.csv"
    argv = ["curve", "--method", "wbr-logreg", "--method", "wbr-ada", "--sizes", "100,200,400", "--repeats", "2"]
    argv += ["--n-test", "500", "--bayes-points", "20", "--bayes-reps", "500", "--out", str(out)]
    assert cli.main(argv) == 0
    prov, rows = read_csv(out)
    assert len(rows) == 12
    assert list(rows[0]) == ["method", "n", "repeat", "rank_loss", "mc_bayes_risk"]
    assert len({r["mc_bayes_risk"] for r in rows}) == 1
    assert "mc_bayes_risk_se" in prov


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mlrank", "verify", "--suite", "lemma31", "--trials", "20"], capture_output=True, text=True)
    assert res.returncode == 0 and "[PASS] lemma31" in res.stdout
