import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kssparse.cli import main
from kssparse.io import (
    FormatError,
    dumps,
    fmt_float,
    format_matrix,
    parse_decomposition,
    parse_matrix,
    parse_weights,
)


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def write(path, text):
    path.write_text(text)
    return path


def test_parse_matrix_formats():
    M = parse_matrix("# comment\n1, 2 3\n\n4\t5,6\n")
    assert np.array_equal(M, [[1, 2, 3], [4, 5, 6]])
    with pytest.raises(FormatError, match="ragged"):
        parse_matrix("1,2\n3\n")
    with pytest.raises(FormatError):
        parse_matrix("1,x\n")
    with pytest.raises(FormatError):
        parse_matrix("# nothing\n")
    with pytest.raises(FormatError):
        parse_matrix("1,nan\n")


def test_fmt_float():
    assert fmt_float(1.0) == "1.0"
    assert fmt_float(0.1) == "0.10000000000000001"
    with pytest.raises(FormatError):
        fmt_float(float("inf"))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64),
                         min_size=3, max_size=3), min_size=1, max_size=5))
def test_csv_round_trip(rows):
    M = np.array(rows)
    text = format_matrix(M)
    M2 = parse_matrix(text)
    assert np.array_equal(M, M2)
    assert format_matrix(M2) == text


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(min_value=0, max_value=1e300, allow_nan=False), min_size=1, max_size=8))
def test_json_round_trip(ws):
    text = dumps({"weights": ws})
    w = parse_weights(text)
    assert w.tolist() == [float(x) for x in ws]
    assert dumps({"weights": w.tolist()}) == text


def test_parse_weights_and_decomposition_errors():
    with pytest.raises(FormatError, match="non-negative"):
        parse_weights('{"weights": [1, -1]}')
    with pytest.raises(FormatError):
        parse_weights("[1, 2]")
    with pytest.raises(FormatError):
        parse_decomposition('{"dim": 2, "points": [[1, 0, 0]], "weights": [1]}')
    X, c = parse_decomposition('{"dim": 1, "points": [[1], [-1]], "weights": [0.5, 0.5]}')
    assert X.shape == (2, 1) and c.tolist() == [0.5, 0.5]


def test_dumps_layout():
    text = dumps({"a": [1.0, 2], "b": {"c": None, "d": True}, "e": []})
    assert '"a": [1.0, 2]' in text
    assert json.loads(text) == {"a": [1.0, 2], "b": {"c": None, "d": True}, "e": []}


def test_sparsify_identity(tmp_path, capsys):
    f = write(tmp_path / "I.csv", format_matrix(np.eye(3)))
    code, rep, _ = run(["sparsify", f, "--epsilon", "0.5", "--mode", "best-effort"], capsys)
    assert code == 0
    assert rep["command"] == "sparsify" and len(rep["inputs"]["matrix"]) == 64
    assert rep["result"]["certificate"]["gap"] == 0.0
    assert set(rep["timings"]) == {"read", "sparsify"}


def test_sparsify_ragged_exit_2(tmp_path, capsys):
    f = write(tmp_path / "bad.csv", "1,2\n3\n")
    code, rep, err = run(["sparsify", f, "--epsilon", "0.5"], capsys)
    assert code == 2 and rep is None and "ragged" in err
    code, _, _ = run(["sparsify", tmp_path / "missing.csv", "--epsilon", "0.5"], capsys)
    assert code == 2


def test_sparsify_rank_one(tmp_path, capsys):
    A = np.repeat(np.array([[1.0], [-2.0]]), 6, axis=1)
    f = write(tmp_path / "r1.csv", format_matrix(A))
    code, rep, _ = run(["sparsify", f, "--epsilon", "1.0"], capsys)
    assert code == 0
    assert len(rep["result"]["sigma"]) == 1 and rep["result"]["size"] == 1
    assert rep["result"]["certificate"]["gap"] <= 1e-10


def test_sparsify_strict_infeasible(tmp_path, capsys):
    f = write(tmp_path / "I.csv", format_matrix(np.eye(3)))
    code, _, err = run(["sparsify", f, "--epsilon", "0.001", "--mode", "strict"], capsys)
    assert code == 3 and "infeasible" in err


def test_constrain_examples(tmp_path, capsys):
    rng = np.random.default_rng(0)
    A = rng.standard_normal((2, 6))
    fa = write(tmp_path / "A.csv", format_matrix(A))
    fz = write(tmp_path / "Z.csv", format_matrix(np.zeros((6, 1))))
    code, rep, _ = run(["constrain", fa, fz, "--epsilon", "0.8", "--max-pieces", "8"], capsys)
    assert code == 0 and rep["result"]["verification"]["residuals"] == [0.0]

    v = np.linalg.svd(A)[2][-1]
    fk = write(tmp_path / "k.csv", format_matrix(v[:, None]))
    code, rep, _ = run(["constrain", fa, fk, "--epsilon", "0.8", "--max-pieces", "8"], capsys)
    assert code == 0
    assert rep["result"]["verification"]["all_within"] is True
    assert rep["result"]["schur_lambda_min"] >= -1e-8 * rep["result"]["schur_norm"]

    fd = write(tmp_path / "D.json", dumps({"weights": [0.0] * 6}))
    code, _, err = run(["constrain", fa, fk, "--epsilon", "0.8", "--reuse-d", fd], capsys)
    assert code == 3 and "hypothesis violated" in err

    fbad = write(tmp_path / "bad.csv", format_matrix(np.ones((5, 1))))
    code, _, _ = run(["constrain", fa, fbad, "--epsilon", "0.8"], capsys)
    assert code == 2


def test_john_examples(tmp_path, capsys):
    code, rep, _ = run(["john", "--builtin", "cube", "--dim", "2", "--epsilon", "0.6"], capsys)
    assert code == 0 and rep["result"]["u_norm"] <= rep["result"]["u_bound"]
    code, rep, _ = run(["john", "--builtin", "simplex", "--dim", "3", "--epsilon", "0.9"], capsys)
    assert code == 0
    f = write(tmp_path / "j.json", dumps({"dim": 2, "points": [[1.0, 0.0], [0.0, 1.0]], "weights": [1.0, 1.0]}))
    code, _, err = run(["john", f, "--epsilon", "0.6"], capsys)
    assert code == 2 and "barycenter" in err
    code, _, _ = run(["john", "--builtin", "cube", "--epsilon", "0.6"], capsys)
    assert code == 2


def test_check_examples(tmp_path, capsys):
    A = np.random.default_rng(1).standard_normal((3, 5))
    fa = write(tmp_path / "A.csv", format_matrix(A))
    for scale in (1.0, 2.0):
        fd = write(tmp_path / "D.json", dumps({"weights": [scale] * 5}))
        code, rep, _ = run(["check", fa, fd, "--epsilon", "0.5"], capsys)
        assert code == 0
        assert rep["result"]["alpha_achieved"] == pytest.approx(scale, abs=1e-10)
        assert rep["result"]["beta_achieved"] == pytest.approx(scale, abs=1e-10)
    fd = write(tmp_path / "neg.json", '{"weights": [1, 1, -1, 1, 1]}')
    code, _, _ = run(["check", fa, fd, "--epsilon", "0.5"], capsys)
    assert code == 2
    fd = write(tmp_path / "short.json", '{"weights": [1, 1]}')
    code, _, _ = run(["check", fa, fd, "--epsilon", "0.5"], capsys)
    assert code == 2


def test_emitted_d_reverifies(tmp_path, capsys):
    A = np.random.default_rng(2).standard_normal((3, 9))
    fa = write(tmp_path / "A.csv", format_matrix(A))
    fd = tmp_path / "D.json"
    code, rep, _ = run(["sparsify", fa, "--epsilon", "0.75", "--max-pieces", "12", "--d-out", fd], capsys)
    assert code == 0
    code, chk, _ = run(["check", fa, fd, "--epsilon", "0.75"], capsys)
    assert code == 0
    for key in ("alpha_achieved", "beta_achieved", "gap", "meets_epsilon"):
        assert chk["result"][key] == rep["result"]["certificate"][key]


def test_deterministic_result(tmp_path, capsys):
    A = np.random.default_rng(3).standard_normal((3, 20))
    fa = write(tmp_path / "A.csv", format_matrix(A))
    outs = []
    for name in ("a.json", "b.json"):
        code, _, _ = run(["sparsify", fa, "--epsilon", "0.9", "--max-pieces", "24", "--budget", "300",
                          "--seed", "5", "--out", tmp_path / name], capsys)
        assert code == 0
        rep = json.loads((tmp_path / name).read_text())
        outs.append(dumps(rep["result"]))
    assert outs[0] == outs[1]


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "kssparse", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.1.0"
