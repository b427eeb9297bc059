import json
import subprocess
import sys

import pytest

from cdcr.cli import main


def run_cli(*args):
    with pytest.raises(SystemExit) as e:
        main(list(args))
    return e.value.code


def test_synth_run_evaluate(tmp_path, capsys):
    data, out = tmp_path / "data", tmp_path / "out"
    assert run_cli("--out", str(data), "synth", "--seed", "3", "--docs", "40", "--entities", "10") == 0
    info = json.loads(capsys.readouterr().out)
    assert info["documents"] == 40 and info["mentions"] >= 120
    assert run_cli("--out", str(out), "run", str(data / "corpus.jsonl")) == 0
    assert "cluster.output:" in capsys.readouterr().out
    assert run_cli("--out", str(out), "evaluate", "--gold", str(data / "gold.tsv"),
                   "--gold-mentions", str(data / "gold_mentions.tsv"), "--json") == 0
    report = json.loads((out / "evaluation.json").read_text())
    assert report["bcubed"]["f_measure"] == 1.0
    assert report["identification"]["recall"] == 1.0


def test_stage_by_stage(tmp_path, capsys):
    data, out = tmp_path / "data", tmp_path / "out"
    run_cli("--out", str(data), "synth", "--seed", "4", "--docs", "30", "--entities", "8")
    base = ["--out", str(out)]
    assert run_cli(*base, "extract", str(data / "corpus.jsonl")) == 0
    assert run_cli(*base, "pairs", "--stats", "--dedupe-surfaces") == 0
    assert "partition person" in capsys.readouterr().out
    assert run_cli(*base, "classify", "--threshold", "0.5") == 0
    assert run_cli(*base, "cluster", "--mode", "agglomerative", "--stop-threshold", "0.5") == 0
    assert (out / "clusters.jsonl").read_text()


def test_config_file(tmp_path):
    corpus = tmp_path / "c.jsonl"
    corpus.write_text(json.dumps({"id": "d1", "body": "Anna Berg met Anna Berg."}) + "\n")
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(f"corpus: {corpus}\nshard_size: 2\n")
    assert run_cli("--config", str(cfg), "--out", str(tmp_path / "o"), "run", str(corpus)) == 0
    cfg.write_text("no_such_setting: 1\n")
    assert run_cli("--config", str(cfg), "--out", str(tmp_path / "o"), "run", str(corpus)) == 1


def test_exit_codes(tmp_path):
    out = ["--out", str(tmp_path / "o")]
    assert run_cli(*out, "run", str(tmp_path / "missing.jsonl")) == 2
    assert run_cli(*out, "run", str(tmp_path), "--lower", "0.8", "--upper", "0.2") == 1
    assert run_cli(*out, "run", str(tmp_path), "--mode", "streaming") == 1
    assert run_cli(*out, "synth", "--typo-rate", "2") == 1
    assert run_cli(*out, "frobnicate") == 1


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "cdcr.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "evaluate" in proc.stdout
