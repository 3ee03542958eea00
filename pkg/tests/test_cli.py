import json

import numpy as np
import pytest

from mpskmax import cli


def _write_matrix(path, rows):
    V = np.asarray(rows, dtype=complex)
    cli.save_matrix(V, path)
    return path


def test_solve_basic(tmp_path, capsys):
    path = _write_matrix(tmp_path / "v.json", [[2.0], [1.0]])
    code = cli.main(["solve", str(path), "--m", "4"])
    out = capsys.readouterr().out
    assert code == 0
    lines = dict(line.split(": ", 1) for line in out.strip().splitlines())
    assert lines["exponents"] == "0 0"
    assert float(lines["value"]) == pytest.approx(9.0)
    assert int(lines["candidates_examined"]) >= 1
    assert "degenerate_skips" in lines


def test_solve_oracle_agreement(tmp_path, capsys):
    rng = np.random.default_rng(0)
    V = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    path = tmp_path / "v.json"
    cli.save_matrix(V, path)
    code = cli.main(["solve", str(path), "--m", "8", "--oracle"])
    out = capsys.readouterr().out
    assert code == 0
    assert "agreement: true" in out


def test_solve_malformed_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not valid json")
    assert cli.main(["solve", str(bad), "--m", "4"]) == 2
    assert "error" in capsys.readouterr().err
    # wrong entry count
    worse = tmp_path / "worse.json"
    worse.write_text(json.dumps({"rows": 2, "cols": 1,
                                 "entries": [[1.0, 0.0]]}))
    assert cli.main(["solve", str(worse), "--m", "4"]) == 2


def test_solve_oracle_budget_refusal(tmp_path, capsys):
    rng = np.random.default_rng(1)
    V = rng.standard_normal((12, 1)) + 1j * rng.standard_normal((12, 1))
    path = tmp_path / "v.json"
    cli.save_matrix(V, path)
    code = cli.main(["solve", str(path), "--m", "8", "--oracle"])
    assert code == 3
    assert "error" in capsys.readouterr().err


def test_solve_csv_format(tmp_path, capsys):
    path = tmp_path / "v.csv"
    path.write_text("2.0,0.0\n1.0,0.0\n")
    code = cli.main(["solve", str(path), "--m", "4", "--format", "csv"])
    out = capsys.readouterr().out
    assert code == 0
    assert "exponents: 0 0" in out


def test_solve_dump_candidates(tmp_path, capsys):
    rng = np.random.default_rng(2)
    V = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    path = tmp_path / "v.json"
    cli.save_matrix(V, path)
    dump = tmp_path / "cands.jsonl"
    code = cli.main(["solve", str(path), "--m", "8",
                     "--dump-candidates", str(dump)])
    out = capsys.readouterr().out
    assert code == 0
    lines = dump.read_text().splitlines()
    assert len(lines) == 104  # generic 4x2 matrix at M=8
    n_reported = int(next(l for l in out.splitlines()
                          if l.startswith("candidates_examined")).split()[-1])
    assert len(lines) == n_reported
    rec = json.loads(lines[0])
    assert set(rec) == {"exponents", "rank", "indices", "cell"}


def test_count_command(capsys):
    assert cli.main(["count", "16", "2", "8"]) == 0
    assert capsys.readouterr().out.strip() == "9696"
    assert cli.main(["count", "20", "2", "8"]) == 0
    assert capsys.readouterr().out.strip() == "19400"
    assert cli.main(["count", "5", "1", "8"]) == 0
    assert capsys.readouterr().out.strip() == "5"
    # big-integer safe
    assert cli.main(["count", "300", "4", "32"]) == 0
    assert int(capsys.readouterr().out.strip()) > 10 ** 15


def test_count_invalid(capsys):
    assert cli.main(["count", "4", "2", "5"]) == 2
    capsys.readouterr()


def test_sim_mlsd_files(tmp_path, capsys):
    out = tmp_path / "run"
    args = ["sim", "mlsd", "--n", "4", "--d", "2", "--m", "4",
            "--snr-db", "0:10:10", "--trials", "3", "--seed", "1",
            "--out", str(out)]
    assert cli.main(args) == 0
    capsys.readouterr()
    mlsd = (out / "mlsd.csv").read_text().splitlines()
    mrc = (out / "mrc.csv").read_text().splitlines()
    assert len(mlsd) == 3 and len(mrc) == 3  # header + 2 SNR points
    assert mlsd[0] == "snr_db,error_rate,trials,errors"
    # determinism across invocations
    first = (out / "mlsd.csv").read_bytes()
    assert cli.main(args) == 0
    capsys.readouterr()
    assert (out / "mlsd.csv").read_bytes() == first


def test_sim_beam_rates_bounded(tmp_path, capsys):
    out = tmp_path / "run"
    assert cli.main(["sim", "beam", "--n", "4", "--d", "2", "--m", "4",
                     "--snr-db", "0:5:5", "--trials", "3", "--seed", "2",
                     "--out", str(out)]) == 0
    capsys.readouterr()
    rows = (out / "beam.csv").read_text().splitlines()[1:]
    for row in rows:
        assert 0.0 <= float(row.split(",")[1]) <= 1.0


def test_sim_invalid_flags(tmp_path, capsys):
    code = cli.main(["sim", "mlsd", "--n", "1", "--d", "2", "--m", "4",
                     "--snr-db", "0:5:10", "--trials", "3",
                     "--out", str(tmp_path)])
    assert code == 2
    capsys.readouterr()
    code = cli.main(["sim", "mlsd", "--n", "4", "--d", "2", "--m", "4",
                     "--snr-db", "bogus", "--trials", "3",
                     "--out", str(tmp_path)])
    assert code == 2
    capsys.readouterr()


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["solve", "--definitely-not-a-flag"])
    assert err.value.code == 2
    capsys.readouterr()


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["--version"])
    assert err.value.code == 0
    assert "mpskmax" in capsys.readouterr().out
