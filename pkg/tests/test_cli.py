import csv
import json

import numpy as np
import pytest

from gridtopo.cli import build_parser, main
from gridtopo.feeders import make_feeder
from gridtopo.topo_est import estimate_from_csv


def _simulate(tmp_path, *extra, feeder="bus8", samples=600, seed=0):
    prefix = str(tmp_path / "sim")
    rc = main(["simulate", "--feeder", feeder, "--samples", str(samples),
               "--seed", str(seed), "--out", prefix, *extra])
    assert rc == 0
    return prefix


def test_simulate_writes_three_files(tmp_path, capsys):
    prefix = _simulate(tmp_path)
    for suffix in (".topology.csv", ".measurements.csv", ".labels.csv"):
        assert (tmp_path / ("sim" + suffix)).exists()
    out = capsys.readouterr().out
    assert "8 buses x 600 samples" in out
    with open(prefix + ".measurements.csv") as fh:
        header = fh.readline().strip()
    assert header == "t,bus_id,phase,magnitude_pu,angle_deg"


def test_simulate_default_is_hourly_year():
    args = build_parser().parse_args(["simulate", "--out", "x"])
    assert args.samples == 8760


def test_simulate_magnitude_only_blanks_angles(tmp_path):
    prefix = _simulate(tmp_path, "--magnitude-only", samples=50)
    with open(prefix + ".measurements.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    assert all(r["angle_deg"] == "" for r in rows)


def test_simulate_topology_file_round_trips(tmp_path):
    prefix = _simulate(tmp_path, samples=50)
    from gridtopo.grid_model import topology_from_csv

    topo = topology_from_csv(prefix + ".topology.csv")
    want = make_feeder("bus8")
    assert topo.edge_set() == want.edge_set()


def test_estimate_recovers_tree_exit_zero(tmp_path, capsys):
    prefix = _simulate(tmp_path)
    out = str(tmp_path / "est.csv")
    rc = main(["estimate", "--measurements", prefix + ".measurements.csv",
               "--root", "1", "--out", out])
    assert rc == 0
    est = estimate_from_csv(out)
    truth = make_feeder("bus8")
    assert set(est.edges) == set(truth.edge_set(include_root=False))
    assert est.root_edge == (0, 1)
    assert (tmp_path / "est.csv.mi.csv").exists()
    with open(out) as fh:
        header = fh.readline().strip()
    assert "mi_nats" in header


def test_estimate_without_root_flags_unrooted(tmp_path, capsys):
    prefix = _simulate(tmp_path)
    out = str(tmp_path / "est.csv")
    rc = main(["estimate", "--measurements", prefix + ".measurements.csv",
               "--out", out])
    assert rc == 1
    assert "unrooted" in capsys.readouterr().err
    est = estimate_from_csv(out)
    assert est.root_edge is None


def test_estimate_mesh_reports_chord(tmp_path, capsys):
    prefix = _simulate(tmp_path, feeder="bus15_mesh", samples=4000)
    out = str(tmp_path / "mesh.csv")
    rc = main(["estimate", "--measurements", prefix + ".measurements.csv",
               "--mesh", "--root", "1", "--out", out])
    assert rc == 0
    assert "1 chord(s)" in capsys.readouterr().out
    est = estimate_from_csv(out)
    assert est.chords == ((5, 7),)


def test_estimate_malformed_csv_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,bus_id,phase,magnitude_pu,angle_deg\n0,0,a,not_a_number,0\n")
    rc = main(["estimate", "--measurements", str(bad),
               "--out", str(tmp_path / "x.csv")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "error:" in err and "line 2" in err


def test_estimate_missing_file_exits_two(tmp_path, capsys):
    rc = main(["estimate", "--measurements", str(tmp_path / "nope.csv"),
               "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_magnitude_only_estimate_auto_source(tmp_path):
    prefix = _simulate(tmp_path, "--magnitude-only", samples=1500)
    out = str(tmp_path / "est.csv")
    rc = main(["estimate", "--measurements", prefix + ".measurements.csv",
               "--source", "auto", "--root", "1", "--out", out])
    assert rc == 0
    est = estimate_from_csv(out)
    assert set(est.edges) == set(make_feeder("bus8").edge_set(include_root=False))


def test_identify_phases_clean_identity(tmp_path, capsys):
    prefix = _simulate(tmp_path, samples=1500)
    est = str(tmp_path / "est.csv")
    main(["estimate", "--measurements", prefix + ".measurements.csv",
          "--root", "1", "--out", est])
    out = str(tmp_path / "phases.csv")
    rc = main(["identify-phases", "--measurements", prefix + ".measurements.csv",
               "--topology", est, "--out", out])
    assert rc == 0
    text = capsys.readouterr().out
    assert "0 claimed labels diagnosed wrong" in text
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        assert r["assigned_phase"] in ("a", "b", "c")


def test_identify_phases_diagnoses_corruption(tmp_path, capsys):
    prefix = _simulate(tmp_path, "--label-corruption", "0.3", samples=1500)
    est = str(tmp_path / "est.csv")
    main(["estimate", "--measurements", prefix + ".measurements.csv",
          "--root", "1", "--out", est])
    capsys.readouterr()
    out = str(tmp_path / "phases.csv")
    rc = main(["identify-phases", "--measurements", prefix + ".measurements.csv",
               "--topology", est, "--out", out])
    assert rc == 0
    text = capsys.readouterr().out
    assert "mislabeled buses:" in text


def test_identify_phases_unrooted_tree_needs_root(tmp_path, capsys):
    prefix = _simulate(tmp_path, samples=1200)
    est = str(tmp_path / "est.csv")
    main(["estimate", "--measurements", prefix + ".measurements.csv", "--out", est])
    capsys.readouterr()
    out = str(tmp_path / "phases.csv")
    rc = main(["identify-phases", "--measurements", prefix + ".measurements.csv",
               "--topology", est, "--out", out])
    assert rc == 1
    assert "--root" in capsys.readouterr().err
    rc = main(["identify-phases", "--measurements", prefix + ".measurements.csv",
               "--topology", est, "--root", "1", "--out", out])
    assert rc == 0


def test_identify_phases_missing_topology_exits_two(tmp_path):
    prefix = _simulate(tmp_path, samples=200)
    rc = main(["identify-phases", "--measurements", prefix + ".measurements.csv",
               "--topology", str(tmp_path / "absent.csv"),
               "--out", str(tmp_path / "p.csv")])
    assert rc == 2


def test_evaluate_writes_report(tmp_path, capsys):
    out = str(tmp_path / "report.json")
    rc = main(["evaluate", "--feeder", "bus8", "--samples", "300",
               "--replicates", "3", "--seed", "1", "--out", out])
    assert rc == 0
    text = capsys.readouterr().out
    assert "ER mean 0.000%" in text
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["replicates"] == 3
    assert "wall_time_s" not in data
    assert data["error_rate_mean"] == 0.0


def test_sweep_writes_axis_files(tmp_path, capsys):
    out = str(tmp_path / "run")
    rc = main(["sweep", "--feeder", "bus8", "--samples", "300",
               "--replicates", "2", "--axis", "noise",
               "--values", "0,0.001", "--out", out])
    assert rc == 0
    csv_path = tmp_path / "run.noise.csv"
    json_path = tmp_path / "run.noise.json"
    assert csv_path.exists() and json_path.exists()
    points = json.loads(json_path.read_text())
    assert [p["value"] for p in points] == [0.0, 0.001]
    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 and rows[0]["axis"] == "noise"


def test_sweep_rejects_garbled_values(tmp_path, capsys):
    rc = main(["sweep", "--feeder", "bus8", "--samples", "200",
               "--replicates", "1", "--axis", "noise",
               "--values", "a,b", "--out", str(tmp_path / "run")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
