from pathlib import Path

import pytest

from femda.cli import main

DATA = Path(__file__).parent / "data"
TINY = ["--m", "3", "--K", "3", "--n-train", "240", "--n-test", "300", "--reps", "1"]


def test_fetch_info(capsys):
    assert main(["fetch-info"]) == 0
    out = capsys.readouterr().out
    assert "spambase/spambase.data" in out and "sat.trn" in out and "ecoli.data" in out
    assert "4601 rows x 58 columns" in out


def test_fetch_info_checks_file(capsys):
    assert main(["fetch-info", "--dataset", "spambase", "--data", str(DATA / "spambase_fragment.data")]) == 3
    assert "3 rows" in capsys.readouterr().out


def test_fetch_info_data_needs_dataset():
    assert main(["fetch-info", "--data", "x"]) == 2


def test_synthetic_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["synthetic", "--scenario", "red:1/3-1/3-1/3", "--methods", "FEMDA,QDA",
                 "--contamination", "0.1", "--out", str(out), *TINY])
    assert code == 0
    assert "| red 1/3-1/3-1/3 | 10% |" in capsys.readouterr().out
    for name in ("results.csv", "timings.csv", "report.md", "report.json"):
        assert (out / name).is_file()


def test_cli_is_deterministic(tmp_path):
    args = ["synthetic", "--scenario", "0.5GG-0.5T-0K", "--methods", "FEMDA,GQDA", "--seed", "4", *TINY]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text('methods = "QDA"\nm = 3\nK = 3\nn_train = 240\nn_test = 300\nreps = 5\nscenarios = ["1-0-0"]\n')
    assert main(["synthetic", "--config", str(cfg), "--reps", "1", "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "results.csv").read_text().strip().splitlines()
    assert len(rows) == 2


@pytest.mark.parametrize(
    "args",
    [
        ["synthetic", "--methods", "SVM"],
        ["synthetic", "--scenario", "0.5GG-0.3T-0.3K"],
        ["synthetic", "--reps", "0"],
        ["real", "--dataset", "ecoli"],
        ["synthetic", "--config", "/nonexistent/file.toml"],
    ],
)
def test_config_errors_exit_2(args, capsys):
    assert main(args) == 2
    assert "configuration error" in capsys.readouterr().err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["real", "--dataset", "iris"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_data_errors_exit_3(tmp_path, capsys):
    assert main(["real", "--dataset", "spambase", "--data", str(tmp_path / "none.data")]) == 3
    # the fragment is far below the class-size filter
    assert main(["real", "--dataset", "spambase", "--data", str(DATA / "spambase_fragment.data")]) == 3
    assert "data error" in capsys.readouterr().err


def test_numerical_failure_exit_4(capsys):
    code = main(["synthetic", "--scenario", "1-0-0", "--methods", "QDA", "--m", "4", "--K", "3",
                 "--n-train", "9", "--n-test", "30", "--reps", "1"])
    assert code == 4
    assert "numerical failure" in capsys.readouterr().err


def test_real_run(tmp_path, capsys):
    import numpy as np

    g = np.random.default_rng(0)
    lines = []
    for k, name in enumerate(["cp", "im", "pp"]):
        for i in range(40):
            vals = " ".join(f"{v:.3f}" for v in g.uniform(0, 1, 7) * (k + 1) / 3)
            lines.append(f"S{k}{i} {vals} {name}")
    p = tmp_path / "ecoli.data"
    p.write_text("\n".join(lines) + "\n")
    code = main(["real", "--dataset", "ecoli", "--data", str(p), "--methods", "FEMDA,LDA",
                 "--reps", "2", "--contamination-schedule", "0,0.2", "--reshuffle-every", "1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "| ecoli | 0% |" in out and "| ecoli | 20% |" in out
    assert "median" in out
