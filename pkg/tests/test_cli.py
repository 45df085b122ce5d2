import csv
import io
import json

import numpy as np
import pytest

from ccrbrane import __version__
from ccrbrane.cli import main, read_path_file
from ccrbrane.transport import PathError


def run(argv):
    buf = io.StringIO()
    code = main(argv, stream=buf)
    return code, buf.getvalue()


def parse_csv(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def test_validate_default_passes():
    code, out = run(["validate"])
    doc = json.loads(out)
    assert code == 0
    assert doc["results"]["failed"] == 0
    assert doc["diagnostics"]["version"] == __version__
    assert set(doc) == {"config", "results", "diagnostics"}


def test_validate_cylinder_couplings():
    code, out = run(["validate", "--brane", "cylinder", "--check", "couplings"])
    assert code == 0
    assert json.loads(out)["results"]["checks"][0]["value"] < 1e-10


def test_validate_coarse_rule_reports_convergence_flags():
    code, out = run(["validate", "--check", "rho", "--quad.order", "8", "--quad.angular", "8", "--quad.tol", "1e-14"])
    doc = json.loads(out)
    assert code in (1, 3)
    assert not doc["diagnostics"]["all_converged"]


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.yaml"
    cfg.write_text("brane: cylinder\nparams: {R: 2.0, L: 1.0, ell: 1.0}\ncutoff: 40\nquad: {order: 24, angular: 96}\n")
    code, out = run(["connection", "--config", str(cfg), "--param", "R=1.0", "--point", "0.1", "0.2"])
    doc = json.loads(out)
    assert code == 0
    assert doc["config"]["params"]["R"] == 1.0      # flag beats file
    assert doc["config"]["cutoff"] == 40            # file beats default
    assert doc["config"]["quad"]["scheme"] == "polar"  # default survives
    assert doc["results"]["A_topo"][1] == pytest.approx(-0.5057166, abs=1e-6)


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("nonsense_key: 1\n")
    assert run(["validate", "--config", str(cfg)])[0] == 2
    assert run(["density-map", "--s1", "0:1"])[0] == 2
    assert run(["frobnicate"])[0] == 2
    assert run(["connection", "--brane", "cylinder", "--param", "R=-1"])[0] == 2


def test_kappa_scan_csv_and_determinism():
    argv = ["kappa-scan", "--ells", "1,5", "--ratios", "1", "--format", "csv"]
    c1, o1 = run(argv)
    c2, o2 = run(argv)
    assert c1 == 0 and o1 == o2
    assert o1.startswith(f"# ccrbrane {__version__}")
    rows = parse_csv(o1)
    assert float(rows[0]["kappa"]) == pytest.approx(0.5057166385818226, abs=1e-4)
    assert abs(float(rows[1]["kappa"]) - 0.5) <= 0.02
    assert rows[0]["kappa_inf"] == "0.5"


def test_density_map_cylinder_rows_constant():
    code, out = run(["density-map", "--brane", "cylinder", "--s1=-1:1:2", "--s2", "0:3:2", "--format", "csv",
                     "--quad.order", "24", "--quad.angular", "96"])
    rows = parse_csv(out)
    assert code == 0 and len(rows) == 4
    assert all(abs(float(r["rho_uu"]) - 0.5057166) < 1e-6 for r in rows)


def test_density_map_mobius_entropy():
    code, out = run(["density-map", "--brane", "mobius", "--param", "ell=40", "--s1", "0:0:1", "--s2", "0:3.141592653589793:3",
                     "--format", "csv"])
    rows = parse_csv(out)
    for r in rows:
        th = float(r["theta"])
        assert float(r["entropy"]) == pytest.approx(-np.log((3 + np.cos(th)) / 4), abs=1e-3)


def test_surface_export_json():
    code, out = run(["surface-export", "--brane", "torus", "--s1", "0:1:2", "--s2", "0:1:3"])
    doc = json.loads(out)
    assert code == 0 and len(doc["results"]["rows"]) == 6
    assert max(r[-1] for r in doc["results"]["rows"]) < 1e-12


def test_transport_path_file_plane_square(tmp_path):
    pts = []
    for k in range(4):
        for t in np.linspace(0, 1, 10, endpoint=False):
            x, y = [(t, 0), (1, t), (1 - t, 1), (0, 1 - t)][k]
            pts.append(f"{x:.17g} {y:.17g}")
    pts.append("0 0")
    f = tmp_path / "square.path"
    f.write_text("# unit square\nbrane: plane\n" + "\n".join(pts) + "\n")
    code, out = run(["transport", "--path-file", str(f), "--quad.order", "24", "--quad.angular", "96"])
    doc = json.loads(out)
    assert code == 0
    assert doc["results"]["geometric_phase"] == pytest.approx(-2.0, abs=1e-8)


def test_transport_mobius_two_turns_returns_label():
    code, out = run(["transport", "--brane", "mobius", "--param", "ell=20", "--point", "0.5", "1.0", "--turns", "2",
                     "--steps", "100", "--quad.order", "24", "--quad.angular", "96"])
    doc = json.loads(out)
    assert code == 0
    lab = doc["results"]["final_label"]
    assert lab["coords"][0] == pytest.approx(0.5) and lab["tau_sign"] == 1
    assert doc["diagnostics"]["unitarity_defect"] < 1e-8


def test_path_file_errors(tmp_path):
    f = tmp_path / "p.path"
    f.write_text("brane: cylinder\n0 0\n1 x\n")
    with pytest.raises(PathError, match=":3:"):
        read_path_file(str(f))
    f.write_text("0 0\n1 1\n")
    with pytest.raises(PathError, match="brane"):
        read_path_file(str(f))
    assert run(["transport", "--path-file", str(f)])[0] == 2


def test_oracle_plane_gates_and_cylinder_failure():
    code, out = run(["oracle", "--brane", "plane", "--point", "1.0", "0.5"])
    assert code == 0 and all(json.loads(out)["results"]["gates"].values())
    code, out = run(["oracle", "--brane", "cylinder", "--cutoff", "48"])
    assert code == 1
    assert json.loads(out)["results"]["gates"]["kernel"] is False


def test_output_file(tmp_path):
    target = tmp_path / "out.json"
    code, out = run(["surface-export", "--brane", "plane", "--s1", "0:1:2", "--s2", "0:1:2", "-o", str(target)])
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["config"]["output"] == str(target)
