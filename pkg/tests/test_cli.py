import copy
import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ibnr import ConfigError
from ibnr.cli import HEADER, main, run
from ibnr.config import config_from_dict, dump_config, parse_config, serialize

BASE = {
    "model": {"k": 1, "K": 1, "P": [[0.25, 0.75], [0.5, 0.5]],
              "service": [{"kind": "exponential", "rate": 1.0}],
              "interarrival": {"kind": "gamma", "shape": 1.0, "rate": 10.0},
              "delta": 0.0, "marks": "lagged"},
    "targets": [{"kind": "first", "i": 1}, {"kind": "second", "i": 1, "i2": 1}],
    "t": "limit",
}

SEMI = {
    "semi_markov": {"kappa": 2, "P_Y": [[0.25, 0.75], [0.5, 0.5]],
                    "service_matrix": [[{"kind": "exponential", "rate": 1.0}, {"kind": "zero"}],
                                       [{"kind": "exponential", "rate": 2.0}, {"kind": "exponential", "rate": 1.0}]],
                    "interarrival": {"kind": "exponential", "rate": 10.0}, "delta": 0.0},
    "targets": [{"kind": "first"}],
    "t": "limit",
}


def write(tmp_path, doc, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def invoke(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_paper_config_parses():
    cfg = parse_config(json.dumps(BASE))
    assert cfg.model.size == 2 and cfg.model.marks == "lagged"
    np.testing.assert_allclose(cfg.model.pi, [0.4, 0.6])


def test_asymptotic_csv_matches_table_values(tmp_path, capsys):
    code, out, _ = invoke(capsys, ["asymptotic", "--config", write(tmp_path, BASE)])
    assert code == 0
    table = rows(out)
    assert table[0] == HEADER
    vals = {(r[0], r[1], r[2]): float(r[3]) for r in table[1:]}
    assert round(vals[("(0)", "(0)", "M_1")], 2) == 2.44
    assert round(vals[("(1)", "(1)", "M_1")], 2) == 3.56
    assert round(vals[("(0)", "(1)", "M_1_1")], 2) == 24.40


def test_compare_paper_example(tmp_path, capsys):
    doc = copy.deepcopy(BASE)
    doc["t"] = 100
    doc["targets"] = [{"kind": "first", "i": 1}]
    doc["sim"] = {"reps": 200, "seed": 3}
    code, out, _ = invoke(capsys, ["compare", "--config", write(tmp_path, doc), "--format", "json"])
    assert code == 0
    rep = json.loads(out)
    assert rep["notes"] == ["Poisson ODE"]
    exact = np.array([r["value"] for r in rep["records"]]).reshape(2, 2)
    np.testing.assert_allclose(np.round(exact, 2), [[2.44, 3.56], [2.44, 3.56]])
    assert all(abs(r["z"]) < 4 for r in rep["records"])
    assert all(r["z"] == pytest.approx((r["estimate"] - r["value"]) / r["stderr"]) for r in rep["records"])


def test_simulate_is_byte_identical(tmp_path, capsys):
    doc = copy.deepcopy(BASE)
    doc["t"] = 5
    path = write(tmp_path, doc)
    outs = []
    for n in range(2):
        out_file = tmp_path / f"o{n}.csv"
        assert main(["simulate", "--config", path, "--reps", "50", "--seed", "4", "--out", str(out_file)]) == 0
        outs.append(out_file.read_bytes())
    assert outs[0] == outs[1]
    assert rows(outs[0].decode())[0] == HEADER


def test_lattice_asymptotic_is_routed(tmp_path, capsys):
    doc = copy.deepcopy(BASE)
    doc["model"]["interarrival"] = {"kind": "deterministic", "value": 1.0}
    doc["targets"] = [{"kind": "first", "i": 1}, {"kind": "mgf", "s": [0.1]}]
    code, out, _ = invoke(capsys, ["asymptotic", "--config", write(tmp_path, doc), "--format", "json"])
    assert code == 0
    assert any("lattice" in n for n in json.loads(out)["notes"])


def test_transient_and_mgf_commands(tmp_path, capsys):
    doc = copy.deepcopy(BASE)
    doc["t"] = 1.0
    doc["targets"] = [{"kind": "mgf", "s": [{"im": 0.5}]}]
    code, out, _ = invoke(capsys, ["mgf", "--config", write(tmp_path, doc)])
    assert code == 0
    labels = {r[2] for r in rows(out)[1:]}
    assert labels == {"psi[0.5j].re", "psi[0.5j].im"}
    doc["targets"] = [{"kind": "workload", "i": 1}]
    code, out, _ = invoke(capsys, ["transient", "--config", write(tmp_path, doc)])
    assert code == 0 and len(rows(out)) == 5


def test_semi_markov_commands(tmp_path, capsys):
    path = write(tmp_path, SEMI)
    code, out, _ = invoke(capsys, ["asymptotic", "--config", path])
    assert code == 0
    vals = [float(r[3]) for r in rows(out)[1:5]]
    np.testing.assert_allclose(vals, [1.0, 0.0, 1.5, 3.0])
    code, out, _ = invoke(capsys, ["embed-info", "--config", path, "--format", "json"])
    rep = json.loads(out)
    pi = [r["value"] for r in rep["records"] if r["target"] == "pi"]
    closed = [r["value"] for r in rep["records"] if r["target"] == "pi_closed_form"]
    np.testing.assert_allclose(pi, closed, atol=1e-12)


@pytest.mark.parametrize("mutate, code, pointer", [
    (lambda d: d["model"].pop("delta"), 2, "/model/delta"),
    (lambda d: d["model"].__setitem__("P", [[0.2, 0.7], [0.5, 0.5]]), 2, "/model/P/0"),
    (lambda d: d["model"]["service"][0].__setitem__("rate", -1), 2, "/model/service/0/rate"),
    (lambda d: d.__setitem__("targets", [{"kind": "first", "i": 2}]), 2, "/targets/0/i"),
    (lambda d: d["model"].__setitem__("service", [{"kind": "gamma", "shape": 2.0, "rate": 1.0}]), 4, None),
])
def test_error_records(tmp_path, capsys, mutate, code, pointer):
    doc = copy.deepcopy(BASE)
    mutate(doc)
    got, _, err = invoke(capsys, ["asymptotic", "--config", write(tmp_path, doc)])
    assert got == code
    rec = json.loads(err)
    assert rec["exit_code"] == code
    if pointer:
        assert rec["pointer"] == pointer


def test_stochasticity_error_names_row(tmp_path, capsys):
    doc = copy.deepcopy(BASE)
    doc["model"]["P"] = [[0.2, 0.7], [0.5, 0.5]]
    _, _, err = invoke(capsys, ["asymptotic", "--config", write(tmp_path, doc)])
    assert "row 0" in json.loads(err)["message"] and "0.9" in json.loads(err)["message"]


def test_simulate_limit_rejected(tmp_path, capsys):
    code, _, err = invoke(capsys, ["simulate", "--config", write(tmp_path, BASE)])
    assert code == 2 and json.loads(err)["pointer"] == "/t"


def test_unreadable_config(capsys):
    code, _, err = invoke(capsys, ["asymptotic", "--config", "/nonexistent/run.json"])
    assert code == 2 and json.loads(err)["error"] == "config"


def test_round_trip_is_idempotent():
    for doc in (BASE, SEMI):
        cfg = config_from_dict(copy.deepcopy(doc))
        once = serialize(cfg)
        twice = serialize(parse_config(once))
        assert once == twice
        assert dump_config(parse_config(once))["targets"] == dump_config(cfg)["targets"]


def test_run_returns_report_object():
    cfg = parse_config(json.dumps(BASE))
    rep = run(cfg, "asymptotic")
    assert len(rep.rows) == 8


def test_console_script_entry_point(tmp_path):
    path = write(tmp_path, BASE)
    proc = subprocess.run([sys.executable, "-m", "ibnr.cli", "asymptotic", "--config", path],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith(",".join(HEADER))


def test_config_rejects_unknown_fields():
    doc = copy.deepcopy(BASE)
    doc["extra"] = 1
    with pytest.raises(ConfigError):
        config_from_dict(doc)
