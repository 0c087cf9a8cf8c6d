import json

import numpy as np
import pytest

from digraphon import (
    bidirected_crossing_pair,
    collapse,
    digraph_from_edgelist,
    digraph_from_json,
    kernel_to_json,
    pair_to_json,
)
from digraphon.cli import main
from digraphon.stepkernel import StepDigraphon, StepKernel, uniform_measures


@pytest.fixture
def crossing_kernel_file(tmp_path):
    path = tmp_path / "crossing.json"
    path.write_text(json.dumps(kernel_to_json(collapse(bidirected_crossing_pair()))))
    return str(path)


@pytest.fixture
def digraphon_file(tmp_path):
    w = StepDigraphon(np.array([[0.0, 0.25], [0.25, 0.0]]), [0.5, 0.5])
    path = tmp_path / "digraphon.json"
    path.write_text(json.dumps(kernel_to_json(w)))
    return str(path)


def test_spectrum_csv_rows(crossing_kernel_file, tmp_path):
    out = tmp_path / "out"
    code = main([
        "spectrum", "--kernel", crossing_kernel_file,
        "--out-dir", str(out), "--format", "csv",
    ])
    assert code == 0
    text = (out / "spectrum.csv").read_text()
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    assert rows[0] == "re,im,mult"
    assert rows[1].startswith("-0.25,")
    assert rows[2].startswith("0.25,")
    assert rows[3] == "0,0,0"


def test_spectrum_json_deterministic_bytes(crossing_kernel_file, tmp_path):
    out = tmp_path / "out"
    assert main(["spectrum", "--kernel", crossing_kernel_file, "--out-dir", str(out)]) == 0
    first = (out / "spectrum.json").read_bytes()
    assert main(["spectrum", "--kernel", crossing_kernel_file, "--out-dir", str(out)]) == 0
    assert (out / "spectrum.json").read_bytes() == first
    obj = json.loads(first)
    assert obj["includes_zero_spectral_point"] is True
    assert obj["config"]["command"] == "spectrum"


def test_trace_check_csv(crossing_kernel_file, tmp_path):
    out = tmp_path / "out"
    code = main([
        "trace-check", "--kernel", crossing_kernel_file, "--ell-max", "6",
        "--out-dir", str(out), "--format", "csv",
    ])
    assert code == 0
    rows = [ln for ln in (out / "trace_check.csv").read_text().splitlines()
            if ln and not ln.startswith("#")]
    assert rows[0] == "ell,lhs,rhs,abs_error"
    assert len(rows) == 5
    assert all(float(r.split(",")[3]) < 1e-8 for r in rows[1:])


def test_cutnorm_value(crossing_kernel_file, tmp_path):
    out = tmp_path / "out"
    assert main(["cutnorm", "--kernel", crossing_kernel_file, "--out-dir", str(out)]) == 0
    obj = json.loads((out / "cutnorm.json").read_text())
    assert obj["value"] == pytest.approx(0.25)
    assert obj["row_blocks"] and obj["col_blocks"]


def test_sample_json_and_determinism(digraphon_file, tmp_path):
    out = tmp_path / "out"
    args = ["sample", "--kernel", digraphon_file, "--n", "30", "--seed", "5",
            "--out-dir", str(out)]
    assert main(args) == 0
    first = (out / "sample_seed5.json").read_bytes()
    assert main(args) == 0
    assert (out / "sample_seed5.json").read_bytes() == first
    g = digraph_from_json(json.loads(first) | {})
    assert g.n == 30


def test_sample_edgelist_format(digraphon_file, tmp_path):
    out = tmp_path / "out"
    assert main(["sample", "--kernel", digraphon_file, "--n", "12", "--seed", "2",
                 "--out-dir", str(out), "--format", "csv"]) == 0
    text = (out / "sample_seed2.txt").read_text()
    g = digraph_from_edgelist(text)
    assert g.n == 12


def test_sample_from_pair(tmp_path):
    pair_path = tmp_path / "pair.json"
    pair_path.write_text(json.dumps(pair_to_json(bidirected_crossing_pair())))
    out = tmp_path / "out"
    assert main(["sample", "--pair", str(pair_path), "--n", "16", "--seed", "3",
                 "--out-dir", str(out)]) == 0
    obj = json.loads((out / "sample_seed3.json").read_text())
    assert obj["allow_bidirected"] is True


def test_converge_report(digraphon_file, tmp_path):
    out = tmp_path / "out"
    args = ["converge", "--kernel", digraphon_file, "--sizes", "10,20",
            "--seeds-per-size", "2", "--epsilon", "0.05", "--seed", "1",
            "--out-dir", str(out)]
    assert main(args) == 0
    obj = json.loads((out / "converge_seed1.json").read_text())
    assert len(obj["rows"]) == 4
    assert set(obj["median_hausdorff_by_n"]) == {"10", "20"}
    first = (out / "converge_seed1.json").read_bytes()
    assert main(args) == 0
    assert (out / "converge_seed1.json").read_bytes() == first


def test_step_converge(tmp_path):
    base = StepDigraphon(np.full((2, 2), 0.2), uniform_measures(2))
    limit_path = tmp_path / "limit.json"
    limit_path.write_text(json.dumps(kernel_to_json(base)))
    member_paths = []
    for i in (1, 2, 3):
        w = StepKernel(base.values + 2.0**-i * 0.05, base.measures, bound=1.0)
        p = tmp_path / f"member{i}.json"
        p.write_text(json.dumps(kernel_to_json(w)))
        member_paths.append(str(p))
    out = tmp_path / "out"
    assert main(["step-converge", "--kernel", str(limit_path),
                 "--members", *member_paths, "--epsilon", "0.1",
                 "--out-dir", str(out), "--format", "csv"]) == 0
    rows = [ln for ln in (out / "step_converge.csv").read_text().splitlines()
            if ln and not ln.startswith("#")]
    assert rows[0].split(",")[:3] == ["n", "seed", "hausdorff"]
    assert len(rows) == 4


def test_double_cover_command(tmp_path):
    out = tmp_path / "out"
    assert main(["double-cover", "--degrees", "3", "--seed", "4",
                 "--out-dir", str(out)]) == 0
    obj = json.loads((out / "double_cover_seed4.json").read_text())
    assert obj["rows"][0]["cycle_density_bidirected"]["2"] == 0.25
    assert obj["rows"][0]["cycle_density_oneway"]["2"] == 0.0


# ---------------------------------------------------------------------------
# exit codes


def test_exit_2_on_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    assert main(["spectrum", "--kernel", str(bad), "--out-dir", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert "error" in err and "message" in err


def test_exit_2_on_schema_violation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"k": 2, "measures": [0.5, 0.5]}))
    assert main(["spectrum", "--kernel", str(bad), "--out-dir", str(tmp_path)]) == 2


def test_exit_2_when_converge_needs_digraphon(tmp_path, crossing_kernel_file):
    # the crossing kernel is a plain kernel, not a digraphon
    assert main(["converge", "--kernel", crossing_kernel_file, "--sizes", "10",
                 "--seeds-per-size", "1", "--epsilon", "0.05", "--seed", "0",
                 "--out-dir", str(tmp_path)]) == 2


def test_exit_2_on_missing_file(tmp_path):
    assert main(["spectrum", "--kernel", str(tmp_path / "nope.json"),
                 "--out-dir", str(tmp_path)]) == 2


def test_exit_2_when_sample_given_both_inputs(tmp_path, digraphon_file):
    pair_path = tmp_path / "pair.json"
    pair_path.write_text(json.dumps(pair_to_json(bidirected_crossing_pair())))
    assert main(["sample", "--kernel", digraphon_file, "--pair", str(pair_path),
                 "--n", "5", "--seed", "0", "--out-dir", str(tmp_path)]) == 2


def test_exit_3_on_budget_error(tmp_path):
    big = StepKernel(np.zeros((25, 25)), uniform_measures(25))
    path = tmp_path / "big.json"
    path.write_text(json.dumps(kernel_to_json(big)))
    assert main(["cutnorm", "--kernel", str(path), "--out-dir", str(tmp_path)]) == 3


def test_exit_4_on_numerical_failure(tmp_path):
    assert main(["double-cover", "--degrees", "3", "--seed", "0",
                 "--tol", "1e-30", "--out-dir", str(tmp_path)]) == 4
