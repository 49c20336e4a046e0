import json
import math
import subprocess
import sys

import numpy as np
import pytest

from projangle.cli import fixture_documents, main
from projangle.linalg_core import matrix_to_json


def run(*argv):
    proc = subprocess.run([sys.executable, "-m", "projangle", *argv],
                          capture_output=True, text=True, check=False)
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    out = tmp_path_factory.mktemp("fx")
    assert main(["fixtures", "--out", str(out)]) == 0
    return out


def call(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_fixture_set_is_complete():
    names = set(fixture_documents())
    for want in ("planar_pi3_p.json", "equal_p.json", "counterexample_5_q.json",
                 "commuting_3.json", "extension_system.json", "extension_P1.json"):
        assert want in names


def test_analyze_planar(capsys, fx):
    code, out, _ = call(capsys, "analyze-pair", str(fx / "planar_pi3_p.json"), str(fx / "planar_pi3_q.json"))
    assert code == 0
    doc = json.loads(out)
    assert doc["c_value"] == pytest.approx(0.5, abs=1e-12)
    assert doc["canonical"]["generic"][0]["t"] == pytest.approx(0.25, abs=1e-12)
    assert doc["battery"]["join_in_algebra"] is True


def test_analyze_equal_pair(capsys, fx):
    code, out, _ = call(capsys, "analyze-pair", str(fx / "equal_p.json"), str(fx / "equal_q.json"))
    doc = json.loads(out)
    assert code == 0 and doc["c_value"] == 0.0 and doc["canonical"]["generic"] == []


def test_analyze_text_flags_degenerate(capsys, tmp_path):
    # nearly equal lines: gap sin^2(1e-4) = 1e-8 < cluster_tol
    c, s = math.cos(1e-4), math.sin(1e-4)
    (tmp_path / "p.json").write_text(json.dumps(matrix_to_json(np.diag([1.0, 0.0]))))
    (tmp_path / "q.json").write_text(json.dumps(matrix_to_json([[c * c, c * s], [c * s, s * s]])))
    code, out, _ = call(capsys, "--format", "text", "analyze-pair",
                        str(tmp_path / "p.json"), str(tmp_path / "q.json"))
    assert code == 0
    assert "degenerate angle" in out
    # the near-1 eigenvalue is absorbed into the meet, so c reads 0
    assert "\nc_value: 0\n" in out
    assert "spectral_gap_at_1: 9.99999993" in out


def test_text_renders_twelve_digits(capsys, fx):
    code, out, _ = call(capsys, "family-scan", "--kind", "counterexample", "--n-max", "3", "--format", "text")
    assert code == 0
    assert f"c_value={math.cos(0.5):.12g}" in out


@pytest.mark.parametrize("kind", ["counterexample", "forbidden"])
def test_family_scan_closed_form(capsys, kind):
    code, out, _ = call(capsys, "family-scan", "--kind", kind, "--n-max", "5")
    doc = json.loads(out)
    assert code == 0 and doc["monotone"]
    cs = [r["c_value"] for r in doc["rows"]]
    np.testing.assert_allclose(cs, [math.cos(1 / n) for n in range(2, 6)], atol=1e-10)
    assert all(r["meet_rank"] == 0 for r in doc["rows"])


def test_family_scan_usage_errors():
    code, _, err = run("family-scan", "--kind", "counterexample", "--n-max", "1")
    assert code == 2 and "n-max" in err
    code, _, _ = run("family-scan", "--kind", "other", "--n-max", "3")
    assert code == 2


def test_closure_reports(capsys, fx, tmp_path):
    code, out, _ = call(capsys, "closure", str(fx / "planar_pi3_p.json"), str(fx / "planar_pi3_q.json"))
    assert code == 0 and json.loads(out)["dim"] == 4
    code, out, _ = call(capsys, "closure", str(fx / "planar_pi3_p.json"))
    doc = json.loads(out)
    assert doc["dim"] == 1 and doc["audit"] == []
    audit = tmp_path / "audit.jsonl"
    files = [str(fx / f"commuting_{k}.json") for k in (1, 2, 3)]
    code, out, _ = call(capsys, "closure", *files, "--audit-out", str(audit))
    doc = json.loads(out)
    # diag patterns (1,1,0), (1,0,1), (0,1,1), (0,0,1) by coordinate: 4 atoms
    assert doc["dim"] == 4 and doc["abelian"] is True
    rows = [json.loads(line) for line in audit.read_text().splitlines()]
    assert len(rows) == 3 and all(r["c_value"] == 0 for r in rows)


def test_extension_actions(capsys, fx):
    sys_file = str(fx / "extension_system.json")
    code, out, _ = call(capsys, "extension", sys_file, "--action", "angle",
                        "--p1", str(fx / "extension_P1.json"), "--p2", str(fx / "extension_P2.json"))
    assert code == 0
    assert json.loads(out)["c_value"] == pytest.approx(math.cos(math.pi / 6), abs=1e-12)

    code, out, _ = call(capsys, "extension", sys_file, "--action", "decompose",
                        "--element", str(fx / "extension_scalar.json"))
    doc = json.loads(out)
    assert code == 0 and doc["compact_norm"] == 0.0 and doc["round_trip_error"] == 0.0

    code, out, _ = call(capsys, "extension", sys_file, "--action", "lift", "--bits", "s1=1,s2=0")
    doc = json.loads(out)
    assert code == 0 and doc["lift_distance"] == 0.0
    assert doc["symbols"] == {"f1": 0.0, "j1": 1.0, "j2": 0.0}

    code, out, _ = call(capsys, "extension", sys_file, "--action", "scan", "--n-max", "2")
    doc = json.loads(out)
    assert [r["c_value"] for r in doc["rows"]] == pytest.approx([math.cos(1.0), math.cos(0.5)], abs=1e-10)


def test_extension_ill_conditioned_lift_exits_3(fx, tmp_path):
    doc = json.loads((fx / "extension_system.json").read_text())
    doc["blocks"] = [{"label": "j1", "dim": 1, "kind": "infinite"}]
    doc["busby"] = {"j1": "s1"}
    (tmp_path / "tiny.json").write_text(json.dumps(doc))
    # a single 1x1 block with noise of norm exactly 1/2 puts the
    # eigenvalue 1 - 1/2 or 1 + 1/2 on the boundary for one sign
    for seed in range(6):
        code, _, err = run("extension", str(tmp_path / "tiny.json"), "--action", "lift",
                           "--bits", "s1=1", "--noise-norm", "0.5", "--seed", str(seed))
        if code == 3:
            assert "ill-conditioned" in err
            return
    pytest.fail("no seed produced a boundary eigenvalue")


def test_extension_bad_bits(capsys, fx):
    code, _, err = call(capsys, "extension", str(fx / "extension_system.json"),
                        "--action", "lift", "--bits", "s1=2")
    assert code == 2 and "bits" in err


def test_malformed_and_invalid_inputs(tmp_path, fx):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rows": 2, ')
    code, _, err = run("analyze-pair", str(bad), str(bad))
    assert code == 2 and "malformed JSON" in err
    notp = tmp_path / "notp.json"
    notp.write_text(json.dumps(matrix_to_json([[1.0, 1.0], [0.0, 0.0]])))
    code, _, err = run("analyze-pair", str(notp), str(notp))
    assert code == 2 and "not a projection" in err
    code, _, err = run("analyze-pair", str(fx / "planar_pi3_p.json"), str(fx / "counterexample_5_p.json"))
    assert code == 2 and "dimension mismatch" in err
    code, _, _ = run("analyze-pair", str(tmp_path / "missing.json"), str(bad))
    assert code == 2


def test_output_is_byte_identical(fx):
    argv = ["--seed", "7", "extension", str(fx / "extension_system.json"),
            "--action", "lift", "--bits", "s1=1", "--noise-norm", "0.3"]
    first = run(*argv)
    second = run(*argv)
    assert first[0] == 0 and first[1] == second[1]
    argv = ["closure", str(fx / "counterexample_5_p.json"), str(fx / "counterexample_5_q.json")]
    assert run(*argv)[1] == run(*argv)[1]


def test_global_flags_after_subcommand(capsys):
    code, out, _ = call(capsys, "family-scan", "--kind", "forbidden", "--n-max", "2", "--format", "text")
    assert code == 0 and out.startswith("kind: forbidden")
    code, _, err = call(capsys, "--eq-tol", "1e-3", "--cluster-tol", "1e-4",
                        "family-scan", "--kind", "forbidden", "--n-max", "2")
    assert code == 2 and "tolerances" in err
