import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from sasaki import __version__
from sasaki.cli import dumps, fmt_float, main
from sasaki.geodesics import read_csv


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stream=buf)
    return code, buf.getvalue()


def test_verify_flat_subset_passes():
    code, out = run("verify", "--model", "euclidean:2", "--samples", "16", "--seed", "42", "--criterion", "1", "--criterion", "4")
    assert code == 0
    assert "FAIL" not in out
    assert out.strip().endswith("suites passed on euclidean:2")


def test_verify_over_tight_tolerance_fails():
    code, out = run("verify", "--model", "halfplane", "--tol", "1e-12", "--criterion", "1")
    assert code == 1
    assert "FAIL" in out


def test_verify_json_schema_and_determinism():
    argv = ("verify", "--model", "sphere:1", "--samples", "8", "--criterion", "2", "--format", "json")
    code1, out1 = run(*argv)
    code2, out2 = run(*argv)
    assert code1 == code2 == 0
    assert out1 == out2
    doc = json.loads(out1)
    assert list(doc) == ["config", "suites", "version"]
    assert doc["version"] == __version__
    assert doc["config"]["model"] == "sphere:1" and doc["config"]["seed"] == 42
    assert [s["name"] for s in doc["suites"]] == ["base.constant_curvature", "base.scalar_curvature"]
    assert all(set(s) == {"name", "max_defect", "tol", "pass"} for s in doc["suites"])


def test_verify_csv():
    code, out = run("verify", "--model", "torus:2", "--samples", "4", "--criterion", "2", "--criterion", "5", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "name,max_defect,tol,pass"
    assert lines[1].startswith("base.constant_curvature,") and lines[-1].startswith("bundle.sasaki_scalar_flat,")


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "--model", "klein"),
        ("verify", "--model", "sphere:-1"),
        ("verify", "--samples", "0"),
        ("verify", "--seed", "-3"),
        ("classify", "--model", "euclidean:2", "--field", "ext:rot:1,2"),
        ("classify", "--model", "euclidean:2", "--field", "const:1,2,3"),
        ("scalar", "--model", "halfplane", "--x", "0,0.01"),
        ("scalar", "--model", "halfplane", "--x", "0,1,2"),
        ("geodesic", "--model", "halfplane", "--x", "0,0.01"),
        ("geodesic", "--model", "euclidean:2", "--dt", "0"),
    ],
)
def test_bad_input_exits_2(argv):
    assert run(*argv)[0] == 2


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as err:
        main(["geodesic", "--z", "1,0", "--vdot", "1,0"])
    assert err.value.code == 2


def test_classify_rotation_extension_on_sphere():
    code, out = run("classify", "--model", "sphere:1", "--field", "ext:rotation:1,2", "--samples", "16", "--format", "json")
    assert code == 0
    rows = {r["name"]: r for r in json.loads(out)["suites"]}
    for name in ("killing", "symplectic", "strictly_contact", "mirror"):
        assert rows[name]["pass"], name
    assert abs(rows["mirror"]["lambda"]) < 1e-9


def test_classify_xi_on_plane():
    code, out = run("classify", "--model", "euclidean:2", "--field", "xi", "--samples", "16")
    assert code == 0
    assert "mirror lambda = -1" in out


def test_classify_vertical_constant_on_plane():
    code, out = run("classify", "--model", "euclidean:2", "--field", "v:const:1,0", "--samples", "8", "--format", "json")
    rows = {r["name"]: r for r in json.loads(out)["suites"]}
    assert rows["incompressible"]["pass"] and rows["killing"]["pass"]


def test_classify_bare_base_field_uses_extension():
    code, out = run("classify", "--model", "euclidean:2", "--field", "position", "--samples", "4", "--format", "csv")
    names = [line.split(",")[0] for line in out.strip().splitlines()[1:]]
    assert code == 0 and "affine" in names and "killing" in names


@pytest.mark.parametrize(
    "model,x,v,expected",
    [
        ("euclidean:2", "0.3,0.4", "1,-2", (0.0, 0.0, 0.0)),
        ("sphere:1", "0,0", f"{math.sqrt(0.5)!r},0", (2.0, 4.0, 1.0)),
        ("halfplane", "0,1", "0,0", (-2.0, 0.0, -2.0)),
    ],
)
def test_scalar(model, x, v, expected):
    code, out = run("scalar", "--model", model, "--x", x, "--v", v, "--format", "json")
    assert code == 0
    res = json.loads(out)["result"]
    got = (res["scal"], res["curvature_norm_sq"], res["sasaki_scal"])
    assert got == pytest.approx(expected, abs=1e-12)


def test_geodesic_straight_line(tmp_path):
    path = str(tmp_path / "line.csv")
    code, out = run(
        "geodesic", "--model", "euclidean:2", "--x", "0,0", "--v", "1,1", "--xdot", "0.5,-0.25",
        "--z", "0.1,0", "--T", "2", "--dt", "0.01", "--out", path, "--format", "json",
    )
    assert code == 0
    data, note = read_csv(path)
    assert note is None
    t = data[:, 0]
    assert np.max(np.abs(data[:, 1] - 0.5 * t)) < 1e-12
    assert np.max(np.abs(data[:, 3] - (1 + 0.1 * t))) < 1e-12
    res = json.loads(out)["result"]
    assert res["t"] == 2.0 and res["exit"] is None


def test_geodesic_great_circle():
    code, out = run(
        "geodesic", "--model", "sphere:1", "--x", "1,0", "--v", "0.3,0.2", "--xdot", "0,1",
        "--T", repr(2 * math.pi), "--dt", "1e-3", "--format", "json",
    )
    res = json.loads(out)["result"]
    assert code == 0
    assert np.max(np.abs(np.array(res["x"]) - [1.0, 0.0])) < 1e-6
    assert res["energy_drift"] < 1e-6


def test_geodesic_with_vdot():
    code, out = run("geodesic", "--model", "euclidean:2", "--vdot", "1,0", "--T", "1", "--dt", "0.5", "--format", "json")
    assert code == 0 and json.loads(out)["result"]["v"] == [1.0, 0.0]


def test_geodesic_domain_exit_writes_partial_csv(tmp_path):
    path = str(tmp_path / "down.csv")
    code, out = run("geodesic", "--model", "halfplane", "--x", "0,1", "--xdot", "0,-1", "--T", "5", "--dt", "0.01", "--out", path)
    assert code == 3
    data, note = read_csv(path)
    assert note == "DomainExit"
    assert data[-1, 0] < 5.0 and np.all(data[:, 2] >= 0.1)
    assert "DomainExit" in out


def test_geodesic_csv_to_stdout():
    code, out = run("geodesic", "--model", "torus:2", "--xdot", "1,0", "--T", "0.2", "--dt", "0.1", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("t,x1,x2") and len(lines) == 4


def test_float_formatting():
    assert fmt_float(0.1) == "0.10000000000000001"
    assert fmt_float(2.0) == "2.0"
    assert fmt_float(1e-300) == "1e-300"
    assert fmt_float(1 / 3) == "0.33333333333333331"
    assert fmt_float(float("nan")) == "null"
    assert dumps({"a": [1, 2.5, True, None, "s"]}) == '{"a": [1, 2.5, true, null, "s"]}'
    assert json.loads(dumps({"x": 1 / 3}))["x"] == 1 / 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "sasaki.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout
