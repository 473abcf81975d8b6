import json

import pytest

from qdiff.cli import run


def _records(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_ddt_identity(tmp_path, capsys):
    assert run(["ddt", "--fixture", "identity4", "--seed", "1"]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert lines[0]["type"] == "config" and lines[0]["config"]["seed"] == 1
    rows = lines[1:]
    assert len(rows) == 16
    assert all(r["counts"][r["a"]] == 16 for r in rows)


def test_ddt_csv(tmp_path):
    out = tmp_path / "ddt.csv"
    assert run(["ddt", "--fixture", "present", "--csv", "--seed", "0", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1].startswith("a,")
    assert len(lines) == 18


def test_algo1_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    args = ["algo1", "--fixture", "ls4", "--seed", "3", "--p", "109"]
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    recs = _records(a)
    assert [r["j"] for r in recs[1:]] == [1, 2, 3, 4]


def test_outputs_are_write_once(tmp_path):
    out = tmp_path / "x.jsonl"
    out.write_text("keep")
    assert run(["spectrum", "--fixture", "ls4", "--seed", "0", "--out", str(out)]) == 1
    assert out.read_text() == "keep"


def test_seed_generated_and_printed(tmp_path, capsys):
    out = tmp_path / "s.jsonl"
    assert run(["bv-sample", "--fixture", "ls4", "--p", "5", "--out", str(out)]) == 0
    err = capsys.readouterr().err
    seed = _records(out)[0]["config"]["seed"]
    assert f"seed: {seed}" in err


def test_bv_sample_linear_rows(tmp_path):
    out = tmp_path / "s.jsonl"
    assert run(["bv-sample", "--fixture", "linear4", "--p", "4", "--seed", "2", "--out", str(out)]) == 0
    recs = _records(out)[1:]
    # linear4 row j is deterministic under BV
    assert [set(r["samples"]) for r in recs] == [{0b0001}, {0b0011}, {0b0110}, {0b1100}]


def test_algo2_and_verify(tmp_path):
    out = tmp_path / "v.jsonl"
    assert run(["verify", "--fixture", "linear4", "--seed", "0", "--out", str(out)]) == 0
    recs = _records(out)
    verified = [r for r in recs if r["type"] == "verified"]
    assert len(verified) == 15 and all(r["probability"] == "1/1" for r in verified)
    assert recs[-1] == {"type": "summary", "candidates": 15, "below_half": 0}


def test_sbox_file_is_embedded(tmp_path):
    sbox = tmp_path / "sbox.json"
    sbox.write_text(json.dumps({"m": 3, "n": 2, "table": [0, 1, 2, 3, 3, 2, 1, 0]}))
    out = tmp_path / "o.jsonl"
    assert run(["spectrum", "--sbox", str(sbox), "--seed", "0", "--out", str(out)]) == 0
    recs = _records(out)
    assert recs[0]["config"]["sbox"]["table"] == [0, 1, 2, 3, 3, 2, 1, 0]
    assert all(r["energy"] == 64 for r in recs[1:])


def test_input_errors_exit_1(tmp_path):
    assert run(["ddt", "--fixture", "nope", "--seed", "0"]) == 1
    assert run(["spectrum", "--seed", "0"]) == 1
    assert run(["spectrum", "--fixture", "ls4", "--component", "9", "--seed", "0"]) == 1
    assert run(["algo1", "--fixture", "ls4", "--c", "1", "--seed", "0"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["algo1", "--config", str(bad)]) == 1


def test_config_for_other_command_rejected(tmp_path):
    out = tmp_path / "a.jsonl"
    assert run(["ddt", "--fixture", "ls4", "--seed", "0", "--out", str(out)]) == 0
    assert run(["algo1", "--config", str(out)]) == 1


def test_config_overrides_flags(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"fixture": "linear4", "p": 7, "seed": 11}))
    out = tmp_path / "o.jsonl"
    assert run(["algo1", "--fixture", "ls4", "--p", "50", "--config", str(cfg), "--out", str(out)]) == 0
    c = _records(out)[0]["config"]
    assert (c["fixture"], c["p"], c["seed"]) == ("linear4", 7, 11)


def test_resource_errors_exit_2(capsys):
    assert run(["algo2", "--fixture", "ls4", "--p", "1", "--cap", "1", "--seed", "0"]) == 2
    assert "larger --p" in capsys.readouterr().err
    assert run(["attack", "--seed", "0", "--p", "1", "--cap", "4"]) == 2


def test_attack_output(tmp_path):
    out = tmp_path / "atk.jsonl"
    assert run(["attack", "--seed", "9", "--pairs", "64", "--out", str(out)]) == 0
    rec = _records(out)[1]
    assert rec["candidate"] == {"dx": 0x8000, "dy": 1, "mask": 0xFFFF}
    assert rec["true_value"] == rec["round_keys"][-1] & 0xF
    assert rec["true_rank"] == 1
    assert len(rec["ranking"]) == 16


def test_validate_commands(tmp_path):
    out = tmp_path / "t1.jsonl"
    assert run(["validate-t1", "--m", "6", "--trials", "5", "--p", "16", "--seed", "0", "--out", str(out)]) == 0
    rep = _records(out)[1]
    assert rep["type"] == "report" and rep["trials"] == 5
    out2 = tmp_path / "j.jsonl"
    assert run(["validate-joint", "--m", "6", "--n", "2", "--trials", "3", "--seed", "0", "--out", str(out2)]) == 0
    rep = _records(out2)[1]
    assert rep["n"] == 2 and rep["floor"] == pytest.approx(0.8646647167633873)


def test_help_lists_fixtures(capsys):
    with pytest.raises(SystemExit):
        run(["ddt", "--help"])
    assert "ls4" in capsys.readouterr().out
