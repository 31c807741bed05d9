import csv
import json

import pytest

from bclab import __version__
from bclab.cli import main

COIN_BC = ["bc-run", "--N", "10000", "--seed", "1", "--replicates", "3"]
MARKOV = '{"kind": "markov", "P": [[0.9, 0.1], [0.2, 0.8]]}'


def _run(tmp_path, name, args):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out


def _summary(out, command):
    return json.loads((out / f"{command}.summary.json").read_text())


def test_bc_run_is_byte_identical(tmp_path):
    c1, a = _run(tmp_path, "a", COIN_BC)
    c2, b = _run(tmp_path, "b", COIN_BC)
    assert c1 == c2 == 0
    assert (a / "bc-run.csv").read_bytes() == (b / "bc-run.csv").read_bytes()
    assert (a / "bc-run.summary.json").read_bytes() == (b / "bc-run.summary.json").read_bytes()


def test_bc_run_contents(tmp_path):
    _, out = _run(tmp_path, "a", COIN_BC)
    rows = list(csv.DictReader(open(out / "bc-run.csv")))
    assert {r["stream"] for r in rows} == {"0", "1", "2"}
    assert rows[-1]["N"] == "10000" and float(rows[-1]["E_N"]) == 5000.0
    s = _summary(out, "bc-run")
    assert s["status"] == "ok" and s["version"] == __version__ and len(s["config_hash"]) == 64


def test_workers_do_not_change_bytes(tmp_path):
    args = ["hit", "--radii", "[2, 3]", "--replicates", "4", "--seed", "3", "--cap", "100000"]
    _, a = _run(tmp_path, "a", args + ["--workers", "1"])
    _, b = _run(tmp_path, "b", args + ["--workers", "2"])
    assert (a / "hit.csv").read_bytes() == (b / "hit.csv").read_bytes()
    assert (a / "hit.summary.json").read_bytes() == (b / "hit.summary.json").read_bytes()


def test_check_q_constant_difference(tmp_path):
    code, out = _run(tmp_path, "a", ["check-q", "--family", "[[0, 1], [1, 1]]", "--horizon", "1000"])
    assert code == 2
    s = _summary(out, "check-q")
    assert s["status"] == "failed" and s["witness"]["pair"] == [1, 2]


def test_check_q_pass(tmp_path):
    code, out = _run(tmp_path, "a", ["check-q", "--family", "[[0, 1], [0, 0, 1]]", "--horizon", "10000"])
    assert code == 0 and _summary(out, "check-q")["verdict"] == "pass"


def test_mix_table(tmp_path):
    code, out = _run(tmp_path, "a", ["mix", "--model", MARKOV, "--k_max", "10"])
    assert code == 0
    rows = list(csv.DictReader(open(out / "mix.csv")))
    assert len(rows) == 10 and rows[0]["k"] == "1"
    assert float(rows[0]["psi"]) == pytest.approx(1.4, rel=1e-12)


def test_entropy_json_format(tmp_path):
    code, out = _run(tmp_path, "a", ["entropy", "--radius", "5", "--replicates", "3", "--format", "json"])
    assert code == 0
    data = json.loads((out / "entropy.rows.json").read_text())
    assert data["status"] == "ok" and len(data["rows"]) == 3


def test_resource_exit(tmp_path):
    args = ["maxlog", "--model", MARKOV, "--family", "[[0, 0, 1]]", "--N", "100000"]
    code, out = _run(tmp_path, "a", args)
    assert code == 3
    assert _summary(out, "maxlog")["error"]["kind"] == "resource"
    assert (out / "maxlog.csv").read_text().endswith("# status: failed\n")


def test_resolution_exit(tmp_path):
    code, out = _run(tmp_path, "a", ["maxlog", "--reach", "1", "--N", "1000"])
    assert code == 4
    assert _summary(out, "maxlog")["status"] == "failed"


def test_gate_refuses_bad_family(tmp_path):
    code, out = _run(tmp_path, "a", ["bc-run", "--family", "[[0, 1], [2, 1]]",
                                     "--schedule", '{"kind": "fixed", "interval": [0, 0], "constraints": [0]}'])
    assert code == 2 and _summary(out, "bc-run")["error"]["kind"] == "validation"


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "bc-run", "N": 500, "seed": 9}))
    code, out = _run(tmp_path, "a", ["bc-run", "--config", str(cfg), "--N=800"])
    assert code == 0
    s = _summary(out, "bc-run")
    assert s["config"]["N"] == 800 and s["config"]["seed"] == 9


def test_bad_override(tmp_path, capsys):
    code, _ = _run(tmp_path, "a", ["bc-run", "--nonsense", "1"])
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"]["kind"] == "validation"


def test_radius_schedule_by_delta(tmp_path):
    sched = '{"kind": "radius", "delta": 0.5, "bound": "lower"}'
    code, out = _run(tmp_path, "a", ["bc-run", "--model", MARKOV, "--schedule", sched, "--N", "20000"])
    assert code == 0
    assert _summary(out, "bc-run")["replicates"][0]["S_N"] >= 1


@pytest.mark.parametrize("args", [["mix", "--model", '{"kind": "markov"}'],
                                  ["bc-run", "--schedule", '{"kind": "fixed"}'],
                                  ["bc-run", "--schedule", '{"kind": "radius"}']])
def test_malformed_objects_exit_2(tmp_path, args):
    code, out = _run(tmp_path, "a", args)
    assert code == 2 and _summary(out, args[0])["status"] == "failed"
