import json
import shutil
import subprocess

import numpy as np
import pytest

from horizon_bench.cli import main

RUN = ["run", "--datasets", "henon", "--models", "fnn_adam,lstm", "--runs", "2", "--epochs", "2",
       "--embed-dim", "5", "--lag", "1", "--horizon", "10", "--train-frac", "0.6", "--master-seed", "42"]


class TestRun:
    def test_writes_versioned_json(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(RUN + ["--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data["schema_version"] == 1
        assert data["config"]["master_seed"] == 42
        assert {c["model"] for c in data["cells"]} == {"fnn_adam", "lstm"}

    def test_workers_env_does_not_change_bytes(self, tmp_path, monkeypatch):
        outs = []
        for workers in ("1", "2"):
            monkeypatch.setenv("HORIZON_BENCH_WORKERS", workers)
            out = tmp_path / f"r{workers}.json"
            assert main(RUN + ["--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_failed_runs_exit_nonzero(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        rc = main(["run", "--datasets", "sunspot", "--models", "cnn", "--runs", "1", "--epochs", "1",
                   "--data-dir", str(tmp_path), "--out", str(out)])
        assert rc == 1 and out.exists()
        assert "1 of 1 runs failed" in capsys.readouterr().err

    def test_unknown_model_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["run", "--datasets", "henon", "--models", "svr", "--out", str(tmp_path / "r.json")])
        assert info.value.code == 2


class TestReport:
    @pytest.fixture
    def report(self, tmp_path):
        out = tmp_path / "report.json"
        main(RUN + ["--out", str(out)])
        return out

    def test_markdown_to_stdout(self, report, capsys):
        assert main(["report", "--in", str(report), "--format", "markdown"]) == 0
        text = capsys.readouterr().out
        assert "### henon" in text and "| Step-10 |" in text

    def test_csv_to_file(self, report, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["report", "--in", str(report), "--format", "csv", "--out", str(out)]) == 0
        assert out.read_text().startswith("dataset,model,split,horizon")

    def test_json_identity(self, report, tmp_path):
        out = tmp_path / "again.json"
        main(["report", "--in", str(report), "--format", "json", "--out", str(out)])
        assert out.read_bytes() == report.read_bytes()

    def test_missing_input(self, tmp_path, capsys):
        assert main(["report", "--in", str(tmp_path / "none.json")]) == 2
        assert "none.json" in capsys.readouterr().err


class TestPredict:
    def test_checkpoint_to_csv(self, tmp_path):
        ck = tmp_path / "ck"
        main(RUN + ["--out", str(tmp_path / "r.json"), "--checkpoint-dir", str(ck)])
        out = tmp_path / "pred.csv"
        rc = main(["predict", "--checkpoint", str(ck / "henon__lstm__run000.ckpt"), "--dataset", "henon",
                   "--steps", "1,3,5,10", "--out", str(out)])
        assert rc == 0
        rows = [r.split(",") for r in out.read_text().splitlines()]
        assert rows[0] == ["step", "index", "actual", "predicted"]
        assert sorted({r[0] for r in rows[1:]}, key=int) == ["1", "3", "5", "10"]

    def test_original_units(self, tmp_path):
        ck = tmp_path / "ck"
        main(RUN + ["--out", str(tmp_path / "r.json"), "--checkpoint-dir", str(ck)])
        out = tmp_path / "pred.csv"
        main(["predict", "--checkpoint", str(ck / "henon__fnn_adam__run000.ckpt"), "--steps", "1",
              "--original-units", "--out", str(out)])
        actual = np.array([float(r.split(",")[2]) for r in out.read_text().splitlines()[1:]])
        assert actual.min() < 0

    def test_bad_step(self, tmp_path, capsys):
        ck = tmp_path / "ck"
        main(RUN + ["--out", str(tmp_path / "r.json"), "--checkpoint-dir", str(ck)])
        rc = main(["predict", "--checkpoint", str(ck / "henon__lstm__run000.ckpt"), "--steps", "11"])
        assert rc == 2 and "horizon 11" in capsys.readouterr().err


class TestGen:
    def test_lorenz_csv(self, tmp_path):
        out = tmp_path / "lorenz.csv"
        assert main(["gen", "--system", "lorenz", "--n", "2000", "--out", str(out)]) == 0
        values = np.array([float(v) for v in out.read_text().split()])
        assert values.size == 2000 and np.all(np.abs(values) < 25)

    def test_stdout_and_overrides(self, capsys):
        assert main(["gen", "--system", "henon", "--n", "3", "--discard", "0"]) == 0
        assert [float(v) for v in capsys.readouterr().out.split()] == pytest.approx([0.0, 1.0, -0.4])


@pytest.mark.skipif(shutil.which("horizon-bench") is None, reason="console script not installed")
def test_console_script():
    done = subprocess.run(["horizon-bench", "--version"], capture_output=True, text=True, check=True)
    assert done.stdout.startswith("horizon-bench ")
