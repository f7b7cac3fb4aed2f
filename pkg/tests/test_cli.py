"""Command-line surface: files written, exit codes, determinism."""

from __future__ import annotations

import json

import pytest

from swingenergy.cli import main


def test_simulate_writes_trajectory_csv(tmp_path):
    out = tmp_path / "traj.csv"
    rc = main(["simulate", "--scenario", "ts3_ninebus", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# schema: swingenergy.trajectory/1")
    assert len(lines) == 3 + 201  # two meta lines, header, samples


def test_energy_writes_three_documents(tmp_path):
    base = tmp_path / "run"
    rc = main(["energy", "--scenario", "ts3_ninebus", "--out", str(base)])
    assert rc == 0
    csv = (tmp_path / "run.csv").read_text()
    assert csv.startswith("# schema: swingenergy.energy/1")
    events = json.loads((tmp_path / "run.events.json").read_text())
    assert events["schema"] == "swingenergy.events/1"
    assert any(e["kind"] == "SMPP" for e in events["events"])
    cons = json.loads((tmp_path / "run.conservation.json").read_text())
    assert cons["schema"] == "swingenergy.conservation/1"
    assert cons["relative_drift"] <= 1e-2
    assert cons["divergence"]["system_unbounded"] is False


def test_energy_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for base in (a, b):
        assert main(["energy", "--scenario", "ts10_newengland",
                     "--out", str(base)]) == 0
    for suffix in (".csv", ".events.json", ".conservation.json"):
        pa = a.parent / (a.name + suffix)
        pb = b.parent / (b.name + suffix)
        assert pa.read_bytes() == pb.read_bytes()


def test_report_text_and_json(tmp_path, capsys):
    rc = main(["report", "--scenario", "ts3_ninebus"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "verdict" in text or "stable" in text

    out = tmp_path / "rep.json"
    rc = main(["report", "--scenario", "ts3_ninebus", "--format", "json",
               "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "swingenergy.report/1"
    assert doc["system"]["status"] == "stable"


def test_report_with_overrides_flags(tmp_path):
    out = tmp_path / "rep.json"
    rc = main(["report", "--scenario", "ts3_ninebus", "--clearing-time", "0.2",
               "--horizon", "3.0", "--format", "json", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["system"]["status"] == "unstable"
    assert doc["settings"]["clearing_time"] == pytest.approx(0.2)


def test_equilibria_document(tmp_path):
    out = tmp_path / "eq.json"
    rc = main(["equilibria", "--scenario", "ts3_ninebus", "--reflect", "2,3",
               "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "swingenergy.equilibria/1"
    assert doc["sep"]["kind"] == "SEP"
    assert doc["uep"]["kind"] == "UEP"
    assert doc["uep"]["jacobian_signature"] >= 1
    assert doc["uep_energy"] == pytest.approx(0.8956, abs=1e-3)


def test_cct_document(tmp_path):
    out = tmp_path / "cct.json"
    rc = main(["cct", "--scenario", "ts3_ninebus", "--bracket", "0.1:0.3",
               "--resolution", "0.01", "--horizon", "3.0", "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "swingenergy.cct/1"
    assert doc["cct"] == pytest.approx(0.16)


def test_pes_grid_csv(tmp_path):
    out = tmp_path / "pes.csv"
    rc = main(["pes", "--scenario", "ts3_ninebus", "--axes", "2,3",
               "--grid=-40:40:3,-40:40:3", "--substeps", "30",
               "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# schema: swingenergy.pes/1")
    assert lines[2] == "offset_a_deg,offset_b_deg,smpe"
    assert len(lines) == 3 + 9


def test_unknown_scenario_exits_2(capsys):
    assert main(["simulate", "--scenario", "missing.json",
                 "--out", "x.csv"]) == 2
    assert "scenario" in capsys.readouterr().err.lower()


def test_bad_bracket_exits_3(capsys):
    rc = main(["cct", "--scenario", "ts3_ninebus", "--bracket", "0.3:0.5",
               "--resolution", "0.01", "--horizon", "3.0"])
    assert rc == 3
    assert "bracket" in capsys.readouterr().err.lower()


def test_malformed_pair_arguments_exit_2(capsys):
    assert main(["cct", "--scenario", "ts3_ninebus",
                 "--bracket", "nonsense"]) == 2
    assert main(["pes", "--scenario", "ts3_ninebus", "--axes", "2",
                 "--grid=-40:40:3,-40:40:3"]) == 2
    assert main(["pes", "--scenario", "ts3_ninebus", "--axes", "2,3",
                 "--grid=-40:40:3"]) == 2
    capsys.readouterr()


def test_fault_bus_override_requires_bus_level_document(tmp_path, capsys):
    # a document carrying pre-reduced matrices cannot relocate the fault
    doc = {
        "version": 1,
        "network": {"reduced": {
            "prefault": [[[1.0, -3.0]]], "faulton": [[[1.0, -3.0]]],
            "postfault": [[[1.0, -3.0]]],
        }},
        "machines": [{"id": 1, "m": 0.05, "pm": 0.0, "emf": 1.0}],
        "fault": {"bus": 1, "clearing_time": 0.1},
        "sim": {"dt": 0.01, "horizon": 0.5},
    }
    p = tmp_path / "reduced.json"
    p.write_text(json.dumps(doc))
    rc = main(["simulate", "--scenario", str(p), "--fault-bus", "2",
               "--out", str(tmp_path / "t.csv")])
    assert rc == 2
    assert "pre-reduced" in capsys.readouterr().err


def test_fault_bus_override_on_bus_level_document(tmp_path):
    moved = tmp_path / "moved.json"
    rc = main(["report", "--scenario", "ts3_ninebus", "--fault-bus", "5",
               "--clearing-time", "0.1", "--format", "json",
               "--out", str(moved)])
    assert rc == 0
    base = tmp_path / "base.json"
    assert main(["report", "--scenario", "ts3_ninebus", "--format", "json",
                 "--out", str(base)]) == 0
    a = json.loads(moved.read_text())
    b = json.loads(base.read_text())
    # relocating the fault changes the disturbance, hence the measured peak
    assert a["superimposed"]["smpp"]["value"] != b["superimposed"]["smpp"]["value"]
