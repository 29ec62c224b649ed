import csv
import json

from forensicross.cli import main

LIFECYCLE = "lifecycle_full.yaml"
TAMPER = "tamper_demo.yaml"


def run_cli(*argv) -> int:
    return main(list(argv))


def test_run_writes_three_artifacts(tmp_path, scenario_dir, capsys):
    code = run_cli(
        "run", "--scenario", str(scenario_dir / "bridge_small.yaml"),
        "--out", str(tmp_path),
    )
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["events.jsonl", "metrics.csv", "registry.json"]
    assert "routed transactions" in capsys.readouterr().out


def test_run_rejects_invalid_topology_citing_rule(tmp_path, scenario_dir, capsys):
    code = run_cli(
        "run", "--scenario", str(scenario_dir / "invalid_topology.yaml"),
        "--out", str(tmp_path),
    )
    assert code == 2
    assert "eq1" in capsys.readouterr().err


def test_run_missing_file_is_usage_error(tmp_path, capsys):
    code = run_cli("run", "--scenario", str(tmp_path / "nope.yaml"), "--out", str(tmp_path))
    assert code == 1
    assert "not found" in capsys.readouterr().err


def test_run_parse_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("design: bridge\ntopology: [unclosed\n")
    code = run_cli("run", "--scenario", str(bad), "--out", str(tmp_path))
    assert code == 2
    assert "line" in capsys.readouterr().err


def test_topology_table_rows_and_values(tmp_path, capsys):
    code = run_cli("topology", "--k-min", "2", "--k-max", "10", "--out", str(tmp_path))
    assert code == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 10  # header + 9 rows
    with open(tmp_path / "topology.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 9
    k3 = next(r for r in rows if r["k"] == "3")
    assert k3["mesh_mutual"] == k3["bridge_mutual"] == "9"


def test_topology_single_row(tmp_path, capsys):
    code = run_cli("topology", "--k-min", "3", "--k-max", "3", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "topology.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["m_min"] == "19"


def test_topology_bad_range(tmp_path, capsys):
    code = run_cli("topology", "--k-min", "5", "--k-max", "4", "--out", str(tmp_path))
    assert code == 1
    assert "bad k range" in capsys.readouterr().err


def test_provenance_demo_clean_run(tmp_path, scenario_dir, capsys):
    code = run_cli(
        "provenance-demo", "--scenario", str(scenario_dir / TAMPER),
        "--out", str(tmp_path),
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "all chains intact" in out
    report = json.loads((tmp_path / "tamper_report.json").read_text())
    assert all(v["intact"] for v in report["verdicts"].values())


def test_provenance_demo_single_tamper(tmp_path, scenario_dir, capsys):
    code = run_cli(
        "provenance-demo", "--scenario", str(scenario_dir / TAMPER),
        "--out", str(tmp_path), "--tamper", "B:2:1",
    )
    assert code == 3
    out = capsys.readouterr().out
    report = json.loads((tmp_path / "tamper_report.json").read_text())
    assert report["verdicts"]["B"]["tampered_stages"] == [2]
    assert report["verdicts"]["A"]["intact"]
    b_row = next(line for line in out.splitlines() if line.startswith("B"))
    assert b_row.count("X") == 1


def test_provenance_demo_two_tampers(tmp_path, scenario_dir):
    code = run_cli(
        "provenance-demo", "--scenario", str(scenario_dir / TAMPER),
        "--out", str(tmp_path), "--tamper", "A:0:0", "--tamper", "A:3:2",
    )
    assert code == 3
    report = json.loads((tmp_path / "tamper_report.json").read_text())
    assert report["verdicts"]["A"]["tampered_stages"] == [0, 3]
    assert report["verdicts"]["B"]["intact"]


def test_provenance_demo_bad_tamper_spec(tmp_path, scenario_dir, capsys):
    code = run_cli(
        "provenance-demo", "--scenario", str(scenario_dir / TAMPER),
        "--out", str(tmp_path), "--tamper", "B-2-1",
    )
    assert code == 1


def test_version(capsys):
    assert run_cli("version") == 0
    assert "forensicross" in capsys.readouterr().out


def test_unknown_flag_is_usage_error(capsys):
    assert run_cli("run", "--scenario", "x.yaml", "--frobnicate") == 1


def test_env_var_overrides_out(tmp_path, scenario_dir, monkeypatch):
    env_dir = tmp_path / "from-env"
    flag_dir = tmp_path / "from-flag"
    monkeypatch.setenv("FORENSICROSS_OUT", str(env_dir))
    code = run_cli(
        "run", "--scenario", str(scenario_dir / "bridge_small.yaml"),
        "--out", str(flag_dir),
    )
    assert code == 0
    assert env_dir.exists() and not flag_dir.exists()


def test_cli_outputs_are_byte_stable(tmp_path, scenario_dir):
    dirs = [tmp_path / "one", tmp_path / "two"]
    for d in dirs:
        assert run_cli(
            "run", "--scenario", str(scenario_dir / LIFECYCLE), "--out", str(d)
        ) == 0
    for name in ("events.jsonl", "metrics.csv", "registry.json"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


def test_seed_override_changes_artifacts(tmp_path, scenario_dir):
    a, b = tmp_path / "a", tmp_path / "b"
    run_cli("run", "--scenario", str(scenario_dir / "bridge_small.yaml"),
            "--out", str(a), "--seed", "123")
    run_cli("run", "--scenario", str(scenario_dir / "bridge_small.yaml"),
            "--out", str(b), "--seed", "124")
    assert (a / "events.jsonl").read_bytes() != (b / "events.jsonl").read_bytes()
