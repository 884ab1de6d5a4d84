import csv
import json

import pytest

from ncbcast import cli
from ncbcast.cli import main, sweep, write_sweep
from ncbcast.analytics import ScalingPoint


def read_csv(path):
    with open(path) as f:
        return [row for row in csv.reader(f) if row and not row[0].startswith("#")]


def test_run_writes_all_outputs(tmp_path, capsys):
    out = tmp_path / "r"
    code = main(["run", "--mu", "0.5", "--rho", "0.9", "--slots", "3000", "--seed", "1", "--out", str(out)])
    assert code == 0
    trace = read_csv(out / "trace.csv")
    assert trace[0] == cli.TRACE_HEADER
    assert all(len(r) == 11 for r in trace)
    packets = read_csv(out / "packets.csv")
    assert packets[0] == cli.PACKET_HEADER
    assert all(v.isdigit() for row in packets[1:] for v in row)
    report = json.loads((out / "report.json").read_text())
    assert report["schema_version"] == 1
    assert report["config"]["seed"] == 1 and report["config"]["rng"]
    assert report["hard_violations"] == 0
    assert report["stats"]["packets"] == len(packets) - 1
    assert "mean_delay" in capsys.readouterr().out


def test_rate_round_trip(tmp_path):
    main(["run", "--mu", "0.3", "--rho", "0.7", "--slots", "100", "--out", str(tmp_path / "a")])
    cfg = json.loads((tmp_path / "a" / "report.json").read_text())["config"]
    assert cfg["lambda"] == pytest.approx(0.7 * 0.3, rel=1e-12)
    assert cfg["rho"] == pytest.approx(0.7, rel=1e-12)
    main(["run", "--mu", "0.3", "--lambda", "0.21", "--slots", "100", "--out", str(tmp_path / "b")])
    cfg = json.loads((tmp_path / "b" / "report.json").read_text())["config"]
    assert cfg["rho"] == pytest.approx(0.7, rel=1e-12)


def test_run_without_arrivals(tmp_path):
    out = tmp_path / "z"
    assert main(["run", "--lambda", "0", "--mu", "0.5", "--slots", "100", "--out", str(out)]) == 0
    assert read_csv(out / "packets.csv") == [cli.PACKET_HEADER]
    assert len(read_csv(out / "trace.csv")) == 101


def test_unstable_load_warns_but_runs(tmp_path, caplog):
    with caplog.at_level("WARNING"):
        code = main(["run", "--rho", "1.2", "--mu", "0.5", "--slots", "200", "--out", str(tmp_path)])
    assert code == 0
    assert "not stable" in caplog.text


@pytest.mark.parametrize("argv", [
    ["run", "--mu", "0.5"],
    ["run", "--mu", "0.5", "--rho", "0.5", "--lambda", "0.25"],
    ["run", "--mu", "0", "--rho", "0.5"],
    ["run", "--mu", "0.5", "--rho", "2.5"],
    ["run", "--mu", "0.5", "--rho", "x"],
    ["sweep", "--rhos", "0.5,1.0", "--slots", "10"],
    ["sweep", "--rhos", "0.5,0.6", "--slots", "10,20,30"],
    ["bogus"],
])
def test_usage_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    try:
        code = main(argv)
    except SystemExit as e:
        code = e.code
    assert code == 2


def test_outputs_are_byte_identical(tmp_path):
    args = ["run", "--mu", "0.5", "--rho", "0.95", "--slots", "4000", "--seed", "5"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("trace.csv", "packets.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "77")
    main(["run", "--rho", "0.5", "--slots", "50", "--out", str(tmp_path)])
    assert json.loads((tmp_path / "report.json").read_text())["config"]["seed"] == 77


def test_csv_report_format(tmp_path):
    main(["run", "--rho", "0.5", "--slots", "500", "--format", "csv", "--out", str(tmp_path)])
    rows = dict(read_csv(tmp_path / "report.csv")[1:])
    assert rows["schema_version"] == "1"
    assert "stats.per_rx_mean_delay.3" in rows


def test_arq_mode_outputs(tmp_path):
    main(["run", "--mode", "arq", "--lambda", "0.4", "--mu", "0.5", "--slots", "500", "--out", str(tmp_path)])
    assert read_csv(tmp_path / "trace.csv")[0] == cli.ARQ_TRACE_HEADER
    assert read_csv(tmp_path / "packets.csv")[0] == cli.ARQ_PACKET_HEADER


def test_sweep_with_synthetic_runner():
    def fake(rho, mu, slots, seed, **_):
        d = 3.0 / (1 - rho)
        return {"rho": rho, "lambda": rho * mu, "mu": mu, "x": 1 / (1 - rho),
                "mean_delay_rx1": d, "mean_delay_rx2": d, "mean_delay_rx3": d,
                "mean_delay_avg": d, "mean_queue": 0.0, "slots": slots, "seed": seed}

    rows, slope, points = sweep([0.9, 0.5], 0.5, [100], [2, 1], runner=fake)
    assert slope == pytest.approx(1.0, abs=1e-12)
    assert [(r["rho"], r["seed"]) for r in rows] == [(0.5, 1), (0.5, 2), (0.9, 1), (0.9, 2)]
    assert [p.rho for p in points] == [0.5, 0.9]


def test_sweep_cli_writes_csv(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--mu", "0.5", "--rhos", "0.5,0.7", "--slots", "3000", "--seeds", "1,2",
                 "--out", str(out)])
    assert code == 0
    text = out.read_text().splitlines()
    assert text[0].split(",") == cli.SWEEP_HEADER
    assert len([l for l in text if not l.startswith("#")]) == 5
    assert text[-1].startswith("# slope=")
    assert "loglog slope" in capsys.readouterr().out


def test_write_sweep_footer(tmp_path):
    path = tmp_path / "x.csv"
    write_sweep(path, [], 1.25, [ScalingPoint(0.5, 2.0)])
    assert path.read_text().splitlines()[-1] == "# slope=1.25"


def test_validate_perfect_channel(capsys):
    assert main(["validate", "--mu", "1", "--lambda", "1", "--slots", "1000"]) == 0
    out = capsys.readouterr().out
    assert "ok" in out and "FAIL" not in out


def test_validate_seed_table(tmp_path, capsys):
    code = main(["validate", "--mu", "0.5", "--rho", "0.9", "--slots", "2000", "--seeds", "1,2,3",
                 "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "validate.json").read_text())
    assert [r["seed"] for r in report["runs"]] == [1, 2, 3]
    assert all(r["status"] == "ok" for r in report["runs"])


def test_validate_reports_broken_engine(monkeypatch, capsys):
    from ncbcast import sim as sim_mod
    from ncbcast.coding import CaseLabel, TransmissionPlan

    bad = TransmissionPlan((1,), (1,), CaseLabel.ALL_LEADERS)
    monkeypatch.setattr(sim_mod, "next_transmission", lambda view: bad if view.arrived else TransmissionPlan())
    assert main(["validate", "--mu", "1", "--lambda", "1", "--slots", "10"]) == 1
    assert "FAIL (innovation)" in capsys.readouterr().out
