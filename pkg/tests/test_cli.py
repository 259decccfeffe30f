import json
import subprocess
import sys
from pathlib import Path

import pytest

from fraccurv.cli import ResultTable, main
from fraccurv.config import ConfigError, config_hash, load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, doc, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_dim_cantor(capsys):
    code, out, _ = run(["dim", "--config", str(CONFIGS / "cantor.json")], capsys)
    assert code == 0
    d = json.loads(out)
    assert d["constants"]["delta"]["value"] == pytest.approx(0.6309297536, abs=1e-10)
    assert "tolerance" in d["constants"]["delta"]
    assert d["provenance"]["config_hash"]


def test_profile_empty_range_is_usage_error(capsys):
    code, _, err = run(["profile", "--system", "cantor", "--eps-min", "1e-3", "--eps-max", "1e-3"],
                       capsys)
    assert code == 2 and "nonempty" in err


def test_profile_csv_columns(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(["profile", "--system", "two_three", "--eps-min", "1e-4", "--eps-max", "1e-2",
                      "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "epsilon,lambda1,lambda0,scaled1,scaled0"
    assert len(lines) > 100


def test_rational_profile_is_exact(capsys):
    code, out, _ = run(["profile", "--config", str(CONFIGS / "cantor_rational.json")], capsys)
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert "/" in row[1]


def test_average_cantor(capsys):
    code, out, _ = run(["average", "--system", "cantor", "-T", "1e-10"], capsys)
    assert code == 0
    d = json.loads(out)
    m = d["constants"]["M_tilde"]
    assert abs(d["constants"]["average_content"]["value"] / 2.524275331466853 - 1) < 0.005
    assert "tolerance" in m and d["constants"]["average_content"]["range"] == [1e-10, 1.0]


def test_average_windows(capsys):
    code, out, _ = run(["average", "--config", str(CONFIGS / "cantor.json"), "-T", "1e-40"], capsys)
    assert code == 0
    d = json.loads(out)
    check = {c["name"]: c for c in d["checks"]}["window0_localization"]
    assert abs(check["value"]) < 0.01
    assert d["constants"]["window0_nu"]["value"] == pytest.approx(0.5, abs=1e-15)


def test_declared_clearance_checked(capsys, tmp_path):
    doc = {"system": {"name": "cantor"},
           "windows": [{"intervals": [["-inf", 0.4]], "clearance": 0.1}]}
    code, _, err = run(["average", "--config", write(tmp_path, doc)], capsys)
    assert code == 2 and "clearance" in err


def test_schema_violation(capsys, tmp_path):
    code, _, err = run(["dim", "--config", write(tmp_path, {"system": {"maps": 3}})], capsys)
    assert code == 2 and "schema" in err
    bad = {"system": {"domain": [0, 1], "maps": [{"affine": {"ratio": "0.7", "offset": "0"}},
                                                 {"affine": {"ratio": "0.7", "offset": "0.3"}}]}}
    code, _, err = run(["dim", "--config", write(tmp_path, bad, "b.json")], capsys)
    assert code == 2


def test_budget_exit_code(capsys):
    code, out, err = run(["gaps", "--system", "cantor", "--cutoff", "1e-7", "--budget-gaps", "50"],
                         capsys)
    assert code == 3
    assert out.startswith("word,index,left,right,length")
    assert "budget" in err


def test_inconclusive_exit_code(capsys, tmp_path):
    doc = {"system": {"image": {"base": {"name": "cantor"}, "level": 1}}, "grids": {"depth": 2}}
    code, out, _ = run(["image", "--config", write(tmp_path, doc)], capsys)
    assert code == 4
    assert {c["name"]: c for c in json.loads(out)["checks"]}["mass_condition"]["status"] == \
        "inconclusive"


def test_image_command(capsys):
    code, out, _ = run(["image", "--config", str(CONFIGS / "staircase_level1.json")], capsys)
    assert code == 0
    d = json.loads(out)
    statuses = {c["name"]: c["status"] for c in d["checks"]}
    assert statuses == {"psi_range": "pass", "cocycle_identity": "pass", "mass_condition": "pass"}
    assert d["series"]["largest_image_gaps"][0] == pytest.approx(0.17529951033, abs=1e-10)


def test_image_via_base_spec_plus_level(capsys, tmp_path):
    doc = {"system": {"domain": ["0", "1"],
                      "maps": [{"affine": {"ratio": "1/3", "offset": "0"}},
                               {"affine": {"ratio": "1/3", "offset": "2/3"}}],
                      "image": {"level": 2}}}
    code, out, _ = run(["dim", "--config", write(tmp_path, doc)], capsys)
    d = json.loads(out)
    assert d["constants"]["delta_bracket_lo"]["value"] <= 0.6309297535714575 <= \
        d["constants"]["delta_bracket_hi"]["value"]


def test_lattice_commands(capsys):
    code, out, _ = run(["lattice", "--config", str(CONFIGS / "cantor.json")], capsys)
    d = json.loads(out)
    assert d["series"]["classification"] == "lattice"
    assert all(c["status"] == "pass" for c in d["checks"])
    code, out, _ = run(["lattice", "--config", str(CONFIGS / "two_three.json")], capsys)
    d = json.loads(out)
    assert d["series"]["classification"] == "nonlattice"


def test_constants_command(capsys):
    code, out, _ = run(["constants", "--system", "cantor"], capsys)
    d = json.loads(out)
    assert d["constants"]["c"]["value"] == pytest.approx(0.5, abs=1e-15)
    assert len(d["series"]["c_n"]) == 11


def test_result_table_roundtrip(capsys):
    _, out, _ = run(["constants", "--system", "two_three"], capsys)
    table = ResultTable.from_json(out)
    assert table.to_json() + "\n" == out
    assert json.loads(table.to_json()) == json.loads(out)


def test_output_deterministic(capsys):
    _, a, _ = run(["lattice", "--system", "cantor"], capsys)
    _, b, _ = run(["lattice", "--system", "cantor"], capsys)
    assert a == b


def test_config_hash_ignores_key_order():
    a = {"system": {"name": "cantor"}, "precision": "float", "grids": {"T": 1e-5, "eps_min": 1e-6}}
    b = {"grids": {"eps_min": 1e-6, "T": 1e-5}, "precision": "float", "system": {"name": "cantor"}}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(dict(a, precision="rational"))


def test_load_config_errors():
    with pytest.raises(ConfigError):
        load_config({"system": {"name": "nope"}})
    with pytest.raises(ConfigError):
        load_config({"system": {"name": "cantor"}, "extra": 1})


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "fraccurv", "dim", "--system", "cantor"],
                         capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["constants"]["delta"]["value"] == pytest.approx(0.63092975357)
