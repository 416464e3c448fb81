import csv
import json
from fractions import Fraction as F

import pytest

import riskshare as rs
from riskshare.cli import load_scenario, main


def write_scenario(tmp_path, doc, name="scen.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


PAIR = {
    "distribution": {"values": list(range(10, 0, -1))},
    "agents": [
        {"distortion": "gd", "weight": "3/5"},
        {"distortion": "mmd", "weight": "2/5"},
    ],
    "mode": "comonotonic",
}


def test_eval_command(tmp_path, capsys):
    assert main(["eval", "--scenario", write_scenario(tmp_path, PAIR)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "agent,weight,value"
    val = float(out[1].split(",")[2])
    X = rs.DiscreteRv.of(range(10, 0, -1))
    assert abs(val - float(rs.gd(X))) < 1e-9


def test_validate_command(tmp_path, capsys):
    doc = dict(PAIR, agents=[{"distortion": "mean"}, {"distortion": "gd"}])
    assert main(["validate", "--scenario", write_scenario(tmp_path, doc)]) == 0
    assert "flagged" in capsys.readouterr().out


def test_infconv_and_record(tmp_path, capsys):
    assert main(
        ["infconv", "--scenario", write_scenario(tmp_path, PAIR), "--out", str(tmp_path)]
    ) == 0
    rec = (tmp_path / "representative.txt").read_text(encoding="utf-8")
    rep = rs.DistortionFunction.from_record(rec)
    assert F(1, 3) in rep.breakpoints and F(2, 3) in rep.breakpoints


def test_allocate_round_trip_welfare(tmp_path, capsys):
    scen = write_scenario(tmp_path, PAIR)
    assert main(["allocate", "--scenario", scen, "--out", str(tmp_path)]) == 0
    first = capsys.readouterr().out
    agg = [ln for ln in first.splitlines() if ln.startswith("aggregate:")][0]

    reload_doc = dict(PAIR, allocation={"csv": "allocation.csv"})
    scen2 = write_scenario(tmp_path, reload_doc, name="scen2.json")
    assert main(["verify", "--scenario", scen2, "--out", str(tmp_path), "--trials", "400"]) == 0
    second = capsys.readouterr().out
    welfare_line = [ln for ln in second.splitlines() if ln.startswith("allocation welfare:")][0]
    vals = [float(tok) for tok in welfare_line.split(":")[1].split(",")]
    assert abs(sum(w * v for w, v in zip((0.6, 0.4), vals)) - float(agg.split(":")[1])) < 1e-9


def test_allocation_csv_format(tmp_path):
    scen = write_scenario(tmp_path, PAIR)
    main(["allocate", "--scenario", scen, "--out", str(tmp_path)])
    with open(tmp_path / "allocation.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["state", "X", "X_1", "X_2", "membership"]
    xs = [F(r[1]) for r in rows[1:]]
    assert xs == sorted(xs, reverse=True)
    assert all(r[-1] == "middle" for r in rows[1:])


def test_improve_command(tmp_path, capsys):
    doc = {
        "distribution": {"values": [2, 0]},
        "agents": [{"distortion": "gd"}, {"distortion": "gd"}],
        "allocation": {"parts": [[2, -1], [0, 1]]},
    }
    assert main(["improve", "--scenario", write_scenario(tmp_path, doc), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "comonotonic: True" in out
    assert (tmp_path / "improved.csv").exists()


def test_verify_command_reports(tmp_path, capsys):
    scen = write_scenario(tmp_path, PAIR)
    assert main(["verify", "--scenario", scen, "--out", str(tmp_path), "--trials", "500"]) == 0
    assert "violations\t0" in capsys.readouterr().out
    report = json.loads((tmp_path / "verify_report.json").read_text(encoding="utf-8"))
    assert report["violations"] == 0 and report["trials"] == 500


def test_gap_command(tmp_path, capsys):
    doc = {
        "distribution": {"values": [8, 7, 6, 5, 4, 3, 2, 1]},
        "agents": [{"distortion": "iqd:1/8"}, {"distortion": "iqd:1/8"}],
    }
    assert main(["gap", "--scenario", write_scenario(tmp_path, doc)]) == 0
    assert "gap: 2" in capsys.readouterr().out


def test_plot_command(tmp_path):
    scen = write_scenario(tmp_path, PAIR)
    assert main(["plot", "--scenario", scen, "--out", str(tmp_path / "plots")]) == 0
    for name in ("distortion_1.csv", "distortion_2.csv", "representative.csv", "transfer_1.csv"):
        with open(tmp_path / "plots" / name, newline="", encoding="utf-8") as f:
            rows = list(csv.reader(f))
        assert rows[0] in (["t", "value"], ["x", "f"])
        assert len(rows) > 10


def test_mixed_mode_allocation(tmp_path, capsys):
    doc = {
        "distribution": {"values": list(range(16, 0, -1))},
        "agents": [
            {"distortion": "gd", "weight": 1},
            {"distortion": "mmd", "weight": "7/8"},
            {"distortion": "iqd:1/4", "weight": "39/256"},
        ],
        "mode": "mixed",
    }
    scen = write_scenario(tmp_path, doc)
    assert main(["allocate", "--scenario", scen, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "allocation.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    tags = {r[-1] for r in rows[1:]}
    assert tags == {"A", "B", "middle"}


def test_exit_codes(tmp_path, capsys):
    # grid incompatibility -> 4
    doc = {
        "distribution": {"values": [8, 7, 6, 5, 4, 3, 2, 1]},
        "agents": [{"distortion": "gd"}, {"distortion": "iqd:1/3"}],
        "mode": "mixed",
    }
    assert main(["allocate", "--scenario", write_scenario(tmp_path, doc)]) == 4
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "GridIncompatible"

    # unbounded comonotonic problem -> 3
    doc = {
        "distribution": {"values": [1, 2]},
        "agents": [{"distortion": "mean"}, {"distortion": "gd"}],
        "mode": "comonotonic",
    }
    assert main(["allocate", "--scenario", write_scenario(tmp_path, doc)]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "UnboundedProblem"

    # broken scenario -> 2
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    assert main(["eval", "--scenario", str(bad)]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "InvalidScenario"


def test_distribution_csv_with_probabilities(tmp_path):
    csv_path = tmp_path / "dist.csv"
    csv_path.write_text("value,probability\n10,1/4\n4,1/2\n0,1/4\n", encoding="utf-8")
    doc = {
        "distribution": {"csv": "dist.csv"},
        "agents": [{"distortion": "mean"}],
    }
    sc = load_scenario(write_scenario(tmp_path, doc))
    assert sc.X.n == 4
    assert sorted(sc.X.values) == [0, 4, 4, 10]


def test_distribution_csv_denominator_bound(tmp_path):
    csv_path = tmp_path / "dist.csv"
    csv_path.write_text("value,probability\n1,999983/1000003\n0,20/1000003\n", encoding="utf-8")
    doc = {"distribution": {"csv": "dist.csv"}, "agents": [{"distortion": "mean"}]}
    assert main(["eval", "--scenario", write_scenario(tmp_path, doc)]) == 4


def test_raw_distortion_record(tmp_path, capsys):
    doc = {
        "distribution": {"values": [1, 0]},
        "agents": [
            {
                "distortion": {
                    "breakpoints": [0, "1/2", 1],
                    "coeffs": [[0, 1, 0], [1, -1, 0]],
                    "point_values": [0, "1/2", 0],
                }
            }
        ],
    }
    assert main(["eval", "--scenario", write_scenario(tmp_path, doc)]) == 0
    val = float(capsys.readouterr().out.splitlines()[1].split(",")[2])
    assert val == 0.5  # the raw record is the peaked absolute-deviation shape


def test_distribution_csv_with_belief_columns(tmp_path, capsys):
    csv_path = tmp_path / "dist.csv"
    csv_path.write_text(
        "value,belief_1,belief_2\n"
        "3,1/2,1/6\n2,1/4,1/3\n1,1/4,1/2\n",
        encoding="utf-8",
    )
    doc = {
        "distribution": {"csv": "dist.csv"},
        "agents": [{"distortion": "mean"}, {"distortion": "mean"}],
    }
    sc = load_scenario(write_scenario(tmp_path, doc))
    assert sc.X.n == 3
    assert sc.agents[0].belief.probs == (F(1, 2), F(1, 4), F(1, 4))
    # per-agent expectations under their own beliefs
    assert main(["eval", "--scenario", write_scenario(tmp_path, doc)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert float(lines[1].split(",")[2]) == pytest.approx(3 * 0.5 + 2 * 0.25 + 1 * 0.25)
    assert float(lines[2].split(",")[2]) == pytest.approx(3 / 6 + 2 / 3 + 1 / 2)


def test_a_weights_option_for_trimming_agents(tmp_path, capsys):
    doc = {
        "distribution": {"values": [8, 7, 6, 5, 4, 3, 2, 1]},
        "agents": [{"distortion": "iqd:1/8"}, {"distortion": "iqd:1/8"}],
        "mode": "unconstrained",
        "options": {"a_weights": [1, 0], "c": 4},
    }
    assert main(["allocate", "--scenario", write_scenario(tmp_path, doc), "--out", str(tmp_path)]) == 0
    with open(tmp_path / "allocation.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    # with the whole middle on agent 1, agent 2 only moves on its tail slice
    mid_rows = [r for r in rows[1:] if r[-1] == "middle"]
    assert len({r[3] for r in mid_rows}) == 1
