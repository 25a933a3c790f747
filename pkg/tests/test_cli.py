import json
import math

import pytest

from h3ci.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def data_lines(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("# out=")]


@pytest.mark.parametrize("sub", ["pes", "mex", "phase", "solve"])
def test_help_exits_zero(sub, capsys):
    with pytest.raises(SystemExit) as info:
        main([sub, "--help"])
    assert info.value.code == 0
    text = capsys.readouterr().out
    for flag in ("--solver", "--noise", "--seed", "--out", "--trotter"):
        assert flag in text


def test_pes_d3h(tmp_path, capsys):
    out = tmp_path / "d3h.csv"
    code, _, _ = run(capsys, "pes", "--mode", "d3h", "--r-min", "0.5", "--r-max", "3.0", "--steps", "50",
                     "--solver", "fci", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    header = lines.index("R,rho,theta,E0,E1,E2,gap,solver,converged,seed")
    assert all(l.startswith("#") for l in lines[:header])
    rows = lines[header + 1:]
    assert len(rows) == 50 and all(abs(float(r.split(",")[6])) < 1e-10 for r in rows)


def test_pes_c2v_cqe_matches_fci(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "pes", "--mode", "c2v", "--steps", "5", "--out", str(a))[0] == 0
    assert run(capsys, "pes", "--mode", "c2v", "--steps", "5", "--solver", "cqe", "--noise", "0.0",
               "--out", str(b))[0] == 0
    rows = lambda p: [l.split(",") for l in p.read_text().splitlines() if l[0].isdigit()]
    for ra, rb in zip(rows(a), rows(b)):
        assert abs(float(ra[4]) - float(rb[4])) < 1e-6 and abs(float(ra[5]) - float(rb[5])) < 1e-6


def test_partial_failure_exit_code(tmp_path, capsys):
    code, _, _ = run(capsys, "pes", "--mode", "xy", "--x-min", "0", "--x-max", "1", "--nx", "2",
                     "--y-min", "0", "--y-max", "1.5", "--ny", "2", "--out", str(tmp_path / "x.csv"))
    assert code == 2


def test_config_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as info:
        main(["pes"])
    assert info.value.code == 1 and "usage" in capsys.readouterr().err
    assert run(capsys, "pes", "--mode", "c2v", "--noise", "0.1")[0] == 1  # noise needs cqe
    assert run(capsys, "mex", "--rho", "0")[0] == 1
    assert run(capsys, "phase", "--points", "8")[0] == 1
    assert run(capsys, "solve", "--rho", "1", "--theta", "0")[0] == 1  # coincident nuclei


def test_mex_table_start(tmp_path, capsys):
    out = tmp_path / "mex.csv"
    code, text, _ = run(capsys, "mex", "--theta", "57.819", "--rho", "2.897", "--out", str(out))
    assert code == 0 and "converged" in text
    last = out.read_text().splitlines()[-1].split(",")
    assert abs(float(last[1]) - 90) < 2 and abs(float(last[2]) - math.sqrt(3)) < 0.02


def test_mex_noisy_runs_are_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["mex", "--solver", "cqe", "--seed", "7", "--noise", "0.02", "--max-iter", "5"]
    run(capsys, *args, "--out", str(a))
    run(capsys, *args, "--out", str(b))
    assert data_lines(a) == data_lines(b)


def test_phase_verdicts(capsys):
    code, text, _ = run(capsys, "phase", "--points", "32")
    assert code == 0 and "encloses CI" in text
    value = float(text.split("=")[1].split()[0])
    assert abs(abs(value) - math.pi) < 0.05
    code, text, _ = run(capsys, "phase", "--points", "32", "--cx", "1.0")
    assert "no CI enclosed" in text and abs(float(text.split("=")[1].split()[0])) < 0.05


def test_config_file_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 3, "rho_min": 1.5}))
    out = tmp_path / "o.csv"
    assert run(capsys, "pes", "--mode", "c2v", "--config", str(cfg), "--steps", "4", "--out", str(out))[0] == 0
    text = out.read_text()
    assert "# steps=4" in text and "# rho_min=1.5" in text
    assert sum(1 for l in text.splitlines() if l[0].isdigit()) == 4
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "pes", "--mode", "c2v", "--config", str(cfg))[0] == 1


def test_solve_single_point(capsys):
    code, text, _ = run(capsys, "solve", "--rho", "2.0", "--theta", "80", "--solver", "cqe", "--trotter", "exact")
    assert code == 0 and "E1 =" in text and "gap" in text
