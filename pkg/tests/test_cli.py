import json

import pytest

from coopchain.cli import main
from coopchain.oracle import fig1_scheme


def records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_run_k4(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["run", "--k", "4", "--seed", "7", "--out", str(out)]) == 0
    recs = records(out)
    final = recs[-1]
    assert final["assignment"] == fig1_scheme(4).assignment.as_lists()
    assert final["puDoF"] == "3/4"
    assert recs[0]["schema"] == 1
    nodes = [r for r in recs if r["record"] == "node"]
    assert [n["cm_out"] for n in nodes] == ["CM3", "CM4", "CM2", "CM1"]


def test_run_k8_metrics(tmp_path):
    out = tmp_path / "t.jsonl"
    assert main(["run", "--k", "8", "--out", str(out)]) == 0
    final = records(out)[-1]
    assert final["cm_bits_total"] == 14
    assert final["setup_steps"] == 7


def test_run_k0_config_error(capsys):
    assert main(["run", "--k", "0"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["code"] == 2


def test_bad_trials_config_error():
    assert main(["run", "--k", "4", "--trials", "0"]) == 2


def test_oracle_k4(tmp_path):
    out = tmp_path / "o.jsonl"
    assert main(["oracle", "--k", "4", "--out", str(out)]) == 0
    rec = records(out)[0]
    assert rec["best_count"] == 3
    assert rec["protocol_match"] is True


def test_oracle_overflow():
    assert main(["oracle", "--k", "10"]) == 3


def test_rotate_k8(tmp_path):
    out = tmp_path / "r.jsonl"
    assert main(["rotate", "--k", "8", "--out", str(out)]) == 0
    final = records(out)[-1]
    assert final["puDoF"] == "23/32"
    assert final["per_user_dof"][1:] == ["3/4"] * 7
    assert all(n == 0 for n in final["nets"].values())
    assert final["chain_valid"]


def test_rotate_k16_interior(tmp_path):
    out = tmp_path / "r.jsonl"
    assert main(["rotate", "--k", "16", "--trials", "10", "--out", str(out)]) == 0
    final = records(out)[-1]
    assert final["interior_puDoF"] == "3/4"
    assert final["interior_nodes"] == list(range(5, 13))


def test_verify_round_trip(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    main(["run", "--k", "12", "--seed", "3", "--trials", "20", "--out", str(out)])
    assert main(["verify", str(out)]) == 0
    assert json.loads(capsys.readouterr().out)["ok"]


def test_verify_detects_edited_trace(tmp_path):
    out = tmp_path / "t.jsonl"
    main(["run", "--k", "4", "--out", str(out)])
    recs = records(out)
    recs[-1]["assignment"] = [[1], [2], [], [3]]
    out.write_text("".join(json.dumps(r) + "\n" for r in recs))
    assert main(["verify", str(out)]) == 1


def test_ledger_export_and_tamper(tmp_path, capsys):
    led = tmp_path / "l.jsonl"
    main(["rotate", "--k", "8", "--trials", "5", "--out", str(tmp_path / "r.jsonl"),
          "--ledger-out", str(led)])
    capsys.readouterr()
    assert main(["ledger", str(led)]) == 0
    ok = json.loads(capsys.readouterr().out)
    assert ok["coin_supply"] == 4

    blocks = records(led)
    blocks[2]["transactions"][0]["payee"] += 1
    led.write_text("".join(json.dumps(b) + "\n" for b in blocks))
    assert main(["ledger", str(led)]) == 1
    bad = json.loads(capsys.readouterr().out)
    assert bad["position"] == 2


def test_determinism(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["run", "--k", "8", "--seed", "5", "--out", str(a)])
    main(["run", "--k", "8", "--seed", "5", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("cmd", ["run", "rotate"])
def test_figure_written(tmp_path, cmd):
    fig = tmp_path / "fig.png"
    assert main([cmd, "--k", "8", "--trials", "3", "--out", str(tmp_path / "t.jsonl"),
                 "--figure", str(fig)]) == 0
    assert fig.read_bytes()[:4] == b"\x89PNG"
