import csv
import json
import subprocess
import sys

import pytest

from ednoise.cli import main


@pytest.fixture
def graph_files(tmp_path):
    prefix = tmp_path / "sbm"
    assert main(["gen", "--kind", "sbm", "--sizes", "40,40,40", "--p-in", "0.2",
                 "--p-out", "0.01", "--seed", "3", "--out", str(prefix)]) == 0
    return str(prefix) + ".edges", str(prefix) + ".labels.csv"


def graph_flags(files):
    return ["--graph", files[0], "--labels", files[1], "--undirected-lines"]


def test_probs_rows(tmp_path, capsys):
    assert main(["probs", "--variant", "veto", "--rho", "0.25", "--max-degree", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "degree,q_mv,r_veto,s_seq_sln,s_seq_pwn"
    assert lines[-1].split(",")[2] == "0.578125"
    assert lines[1] == "0,0.0,0.0,0.0,0.0"
    out = tmp_path / "fig.csv"
    assert main(["probs", "--rho", "0.25", "--k", "7", "--max-degree", "30", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 32
    manifest = json.loads((tmp_path / "fig.csv.manifest.json").read_text())
    assert manifest["subcommand"] == "probs"
    assert list(manifest["outputs"]) == [str(out)]


def test_ttest_example(capsys):
    assert main(["ttest", "--a", "73.92,1.1", "--b", "72.27,0.7", "--n", "10"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["t_stat"] == pytest.approx(4.0018, abs=1e-3)
    assert report["reject"] is True
    assert report["df"] == 18


def test_ttest_input_modes(tmp_path, capsys):
    summ = tmp_path / "s.json"
    summ.write_text(json.dumps({"n": 10, "a": {"mean": 42.29, "std": 8.8},
                                "b": {"mean": 37.98, "std": 5.4}}))
    assert main(["ttest", "--summaries", str(summ)]) == 0
    assert json.loads(capsys.readouterr().out)["reject"] is False

    runs = tmp_path / "runs.csv"
    rows = ["group,run,accuracy"] + [f"sln,{i},{70 + i % 3}" for i in range(10)]
    rows += [f"veto,{i},{60 + i % 3}" for i in range(10)]
    runs.write_text("\n".join(rows) + "\n")
    assert main(["ttest", "--runs-csv", str(runs), "--welch"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["reject"] is True and rep["method"] == "welch"

    batch = tmp_path / "batch.csv"
    with open(batch, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["dataset", "model", "level", "variant", "n", "a_mean", "a_std", "b_mean", "b_std"])
        w.writerow(["cora", "gcn", "0.1", "veto", 10, 73.92, 1.1, 72.27, 0.7])
        w.writerow(["cora", "gcn", "0.45", "veto", 10, 42.29, 8.8, 37.98, 5.4])
    table = tmp_path / "table.csv"
    out = tmp_path / "batch.json"
    assert main(["ttest", "--batch", str(batch), "--table-out", str(table),
                 "--group-by", "model,variant", "--out", str(out)]) == 0
    assert [r["reject"] for r in json.loads(out.read_text())] == [True, False]
    text = table.read_text()
    assert "gcn,veto,Overall,1,2,0.500000,1/2 ≈ 0.50" in text


def test_ttest_missing_inputs_is_usage_error():
    assert main(["ttest"]) == 2


def test_gen_and_calibrate(graph_files, tmp_path):
    out, table = tmp_path / "cal.json", tmp_path / "cal.csv"
    argv = ["calibrate", *graph_flags(graph_files), "--level", "0.05,0.1",
            "--out", str(out), "--csv", str(table)]
    assert main(argv) == 0
    results = json.loads(out.read_text())
    assert len(results) == 8
    assert all(abs(r["achieved_level"] - r["target_level"]) < 1e-9 for r in results)
    assert table.read_text().splitlines()[0] == "level,mv-sln,veto-sln,seq-sln,seq-pwn"
    manifest = json.loads((tmp_path / "cal.json.manifest.json").read_text())
    assert set(manifest["outputs"]) == {str(out), str(table)}


def test_calibrate_unreachable_level(graph_files):
    argv = ["calibrate", *graph_flags(graph_files), "--variant", "seq-sln", "--level", "0.9"]
    assert main(argv) == 2


def test_inject_rerun_is_byte_identical(graph_files, tmp_path):
    outs = []
    for i, workers in enumerate(("1", "1", "4")):
        path = tmp_path / f"noisy{i}.csv"
        argv = ["inject", *graph_flags(graph_files), "--variant", "seq-sln",
                "--level", "0.2", "--seed", "7", "--workers", workers, "--out", str(path)]
        assert main(argv) == 0
        outs.append((path.read_bytes(), path.with_suffix(".json").read_bytes()))
    assert outs[0] == outs[1] == outs[2]
    header = outs[0][0].decode().splitlines()[0]
    assert header == "node_id,original_label,noisy_label,flipped"
    side = json.loads(outs[0][1])
    assert side["seed"] == 7 and side["spec"]["variant"] == "seq-sln"


def test_inject_manifest_replays(graph_files, tmp_path):
    path = tmp_path / "noisy.csv"
    argv = ["inject", *graph_flags(graph_files), "--variant", "veto-pwn",
            "--rho", "0.1", "--seed", "3", "--out", str(path)]
    assert main(argv) == 0
    manifest = json.loads((tmp_path / "noisy.csv.manifest.json").read_text())
    first = path.read_bytes()
    assert main(manifest["argv"]) == 0
    assert path.read_bytes() == first
    assert manifest["seed"] == 3
    assert len(manifest["outputs"]) == 2


def test_inject_mask_and_ccn(graph_files, tmp_path):
    ids = tmp_path / "ids.txt"
    ids.write_text("\n".join(str(i) for i in range(0, 120, 2)) + "\n")
    mat = tmp_path / "ccn.csv"
    mat.write_text("0,0.3,0.1\n0.2,0,0.2\n0,0,0\n")
    path = tmp_path / "noisy.csv"
    argv = ["inject", *graph_flags(graph_files), "--variant", "ccn", "--ccn-matrix", str(mat),
            "--mask-ids", str(ids), "--seed", "1", "--rho", "0", "--out", str(path)]
    assert main(argv) == 0
    rows = list(csv.DictReader(path.open()))
    assert all(r["flipped"] == "0" for r in rows if int(r["node_id"]) % 2 == 1)
    assert any(r["flipped"] == "1" for r in rows)


def test_inject_needs_exactly_one_strength(graph_files):
    base = ["inject", *graph_flags(graph_files), "--variant", "sln", "--seed", "1"]
    assert main(base) == 2
    assert main(base + ["--rho", "0.1", "--level", "0.1"]) == 2
    assert main(base + ["--rho", "1.5"]) == 2


def test_verify_small_grid(tmp_path, capsys):
    out = tmp_path / "verify.csv"
    assert main(["verify", "--k-list", "2..4", "--rho-list", "0.1,0.5", "--max-degree", "6",
                 "--max-power", "10", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4 * 3 * 2 * 7 + 3 * 2 * 11 * 2
    assert all(r["pass"] == "1" for r in rows)
    assert "checks passed" in capsys.readouterr().err


def test_eval_deterministic(graph_files, tmp_path):
    texts = []
    for i, workers in enumerate(("1", "1", "3")):
        path = tmp_path / f"eval{i}.csv"
        argv = ["eval", *graph_flags(graph_files), "--variant", "sln", "--variant", "veto-sln",
                "--level", "0,0.2", "--runs", "4", "--seed", "9", "--train-per-class", "5",
                "--workers", workers, "--out", str(path)]
        assert main(argv) == 0
        texts.append(path.read_bytes())
    assert texts[0] == texts[1] == texts[2]
    lines = texts[0].decode().splitlines()
    assert lines[0] == "variant,level,rho,mean_acc,std_acc,runs"
    assert len(lines) == 5


def test_missing_file_is_usage_error(tmp_path):
    assert main(["inject", "--graph", str(tmp_path / "nope"), "--labels", str(tmp_path / "x"),
                 "--variant", "sln", "--rho", "0.1", "--seed", "1"]) == 2


def test_bad_graph_is_usage_error(tmp_path):
    edges = tmp_path / "g.edges"
    edges.write_text("5 5\n")
    labels = tmp_path / "l.csv"
    labels.write_text("0,0\n")
    assert main(["calibrate", "--graph", str(edges), "--labels", str(labels)]) == 2


def test_unknown_subcommand_and_flag():
    assert main(["frobnicate"]) == 2
    assert main(["probs", "--rho", "0.1", "--bogus"]) == 2


def test_help_exits_zero(capsys):
    for cmd in ("probs", "calibrate", "inject", "verify", "ttest", "gen", "eval"):
        assert main([cmd, "--help"]) == 0
    assert "node_id,label" in capsys.readouterr().out


def test_console_module_entry_point():
    res = subprocess.run(
        [sys.executable, "-m", "ednoise", "probs", "--rho", "0.5", "--max-degree", "2"],
        capture_output=True, text=True, check=False,
    )
    assert res.returncode == 0
    assert res.stdout.splitlines()[2].startswith("1,0.5,0.5,")
