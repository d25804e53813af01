import json
import socket

from procs import cli, serve_pair
from rrcguard.cli import main
from rrcguard.ransim import EventTrace, build_preset, dump_config


def test_run_preset_is_tp(tmp_path, capsys):
    assert main(["run", "--preset", "attack-1mue", "--seed", "7",
                 "--output-dir", str(tmp_path)]) == 0
    line = capsys.readouterr().out
    assert "TP" in line and "detection=" in line
    outcome = json.loads((tmp_path / "outcome.json").read_text())
    assert outcome["classification"] == "TP"
    assert (tmp_path / "windows.csv").read_text().startswith("window_id,")


def test_run_is_byte_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "--preset", "attack-2mue", "--seed", "3", "--output-dir", str(d)]) == 0
    assert (a / "trace.jsonl").read_bytes() == (b / "trace.jsonl").read_bytes()


def test_run_from_yaml_matches_preset(tmp_path):
    path = tmp_path / "c.yaml"
    dump_config(build_preset("attack-1mue", 7), path)
    main(["run", "--config", str(path), "--output-dir", str(tmp_path / "y")])
    main(["run", "--preset", "attack-1mue", "--seed", "7", "--output-dir", str(tmp_path / "p")])
    assert ((tmp_path / "y" / "trace.jsonl").read_text()
            == (tmp_path / "p" / "trace.jsonl").read_text())


def test_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("duration_ms: -5\n")
    assert main(["run", "--config", str(bad), "--output-dir", str(tmp_path)]) == 2
    assert "duration_ms" in capsys.readouterr().err


def test_missing_config_and_usage_errors_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 2
    assert main(["run", "--output-dir", str(tmp_path)]) == 2
    assert main(["sweep", "--config", str(tmp_path / "x.yaml"), "--grid", "t3"]) == 2


def test_inspect(tmp_path, capsys):
    main(["run", "--preset", "attack-1mue", "--seed", "7", "--output-dir", str(tmp_path)])
    capsys.readouterr()
    assert main(["inspect", str(tmp_path / "trace.jsonl"), "--json"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["complete"] and info["first_attack_window"] is not None
    assert info["verdicts"]["AttackDetected"] >= 1
    assert main(["inspect", str(tmp_path / "trace.jsonl")]) == 0
    assert "first AttackDetected window" in capsys.readouterr().out


def test_sweep_suite(tmp_path, capsys):
    assert main(["sweep", "--preset", "fig7", "--output-dir", str(tmp_path)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "fig7.csv").exists()
    assert json.loads((tmp_path / "fig7.json").read_text())["passed"]


def test_sweep_grid(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    dump_config(build_preset("attack-1mue", 0), path)
    assert main(["sweep", "--config", str(path), "--grid", "t1=3,10", "--runs", "3",
                 "--output-dir", str(tmp_path), "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["t1"] for r in rows] == [3, 10]
    assert rows[0]["tp"] == 3


def test_serve_pair_over_loopback(tmp_path):
    code, out, err, xapp = serve_pair(tmp_path)
    assert code == 0, err
    assert xapp.returncode == 0, xapp.stderr
    assert "AttackDetected" in xapp.stderr and "Control sent" in xapp.stderr
    assert "AttackDetected" in xapp.stdout
    trace = EventTrace.from_jsonl((tmp_path / "trace.jsonl").read_text())
    assert trace.of("rejected")
    assert "TP" in out


def test_serve_gnb_bind_failure_exits_1(tmp_path):
    with socket.socket() as busy:
        busy.bind(("127.0.0.1", 0))
        busy.listen()
        port = busy.getsockname()[1]
        res = cli("serve-gnb", "--port", port, "--preset", "attack-1mue",
                  "--output-dir", tmp_path)
    assert res.returncode == 1
    assert "cannot bind" in res.stderr


def test_serve_xapp_unreachable_exits_1():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    res = cli("serve-xapp", "--port", port, "--wait-s", "0.3")
    assert res.returncode == 1 and "cannot reach" in res.stderr
