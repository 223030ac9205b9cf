import json
import shutil
import subprocess

import pytest

from molftp.cli import main
from molftp.synthetic import planted_corpus, write_dataset


@pytest.fixture()
def dataset(tmp_path):
    path = tmp_path / "data.csv"
    write_dataset(path, planted_corpus(60, seed=4), ["cli test"])
    return path


def test_gen_synthetic(tmp_path):
    out = tmp_path / "gen.csv"
    assert main(["gen-synthetic", "--n", "30", "--seed", "2", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# synthetic kind=planted n=30 seed=2")
    assert len(lines) == 32
    assert main(["gen-synthetic", "--kind", "leaky", "--n", "20", "-o", str(tmp_path / "l.csv")]) == 0


def test_featurize(tmp_path, dataset, capsys):
    out = tmp_path / "vectors.csv"
    assert main(["featurize", str(dataset), "-o", str(out), "--radius", "4", "--views", "1D,2D"]) == 0
    lines = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")]
    assert len(lines) == 61 and len(lines[0].split(",")) == 2 + 14
    assert "molecules/s" in capsys.readouterr().err
    assert '"radius": 4' in out.read_text().splitlines()[1]


def test_featurize_partial_failure_exit_code(tmp_path, dataset, caplog):
    bad = tmp_path / "bad.csv"
    text = dataset.read_text().splitlines()
    bad.write_text("\n".join(text[:3] + ["C1CC,0"] + text[3:]) + "\n")
    out = tmp_path / "v.csv"
    assert main(["featurize", str(bad), "-o", str(out)]) == 2
    assert len([ln for ln in out.read_text().splitlines() if not ln.startswith("#")]) == 61
    assert "row 1: unmatched ring closure" in caplog.text


def test_featurize_test_rows(tmp_path, dataset):
    rows = tmp_path / "test_rows.txt"
    rows.write_text("\n".join(str(i) for i in range(0, 60, 5)))
    out = tmp_path / "v.csv"
    argv = ["featurize", str(dataset), "-o", str(out), "--leakage", "train_only", "--test-rows", str(rows)]
    assert main(argv) == 0
    assert main(argv[:-2]) == 1


def test_cv_outputs(tmp_path, dataset):
    out = tmp_path / "cv"
    assert main(["cv", str(dataset), "--out-dir", str(out), "--cv-k", "3", "--radius", "3"]) == 0
    report = json.loads((out / "metrics.json").read_text())
    assert report["config"]["cv_k"] == 3
    assert len(report["folds"]) == 3
    first = (out / "metrics.json").read_text()
    assert main(["cv", str(dataset), "--out-dir", str(out), "--cv-k", "3", "--radius", "3"]) == 0
    assert (out / "metrics.json").read_text() == first
    assert (out / "metrics_folds.csv").read_text().startswith("# molftp ")


def test_audit_and_flip(tmp_path, dataset):
    report = tmp_path / "bound_report.csv"
    assert main(["audit-loo", str(dataset), "-o", str(report)]) == 0
    assert "# fraction_within=" in report.read_text()
    flipped = tmp_path / "flipped.csv"
    assert main(["flip", str(dataset), "--fraction", "0.1", "--seed", "3", "-o", str(flipped)]) == 0
    assert (tmp_path / "flipped.csv.flipmask.csv").exists()


def test_config_file(tmp_path, dataset):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"views": ["1D"], "radius": 2}))
    out = tmp_path / "v.csv"
    assert main(["featurize", str(dataset), "--config", str(cfg), "-o", str(out)]) == 0
    header = [ln for ln in out.read_text().splitlines() if not ln.startswith("#")][0]
    assert len(header.split(",")) == 2 + 5


def test_exit_codes(tmp_path, dataset):
    assert main(["featurize", str(dataset), "--radius", "-1"]) == 1
    with pytest.raises(SystemExit) as err:
        main(["featurize", str(dataset), "--colour", "blue"])
    assert err.value.code == 1
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 1
    assert main(["featurize", str(tmp_path / "missing.csv")]) == 2
    empty = tmp_path / "empty.csv"
    empty.write_text("smiles,label\n")
    assert main(["featurize", str(empty)]) == 2
    assert main(["flip", str(dataset), "--fraction", "2", "-o", str(tmp_path / "f.csv")]) == 1


@pytest.mark.skipif(shutil.which("molftp") is None, reason="console script not installed")
def test_console_script(tmp_path):
    out = tmp_path / "g.csv"
    res = subprocess.run(["molftp", "gen-synthetic", "--n", "5", "-o", str(out)], capture_output=True, text=True)
    assert res.returncode == 0 and out.exists()
