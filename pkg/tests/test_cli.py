import json

from main_app import main


def test_build_prints_layer_counts(tmp_path, demo_path, capsys):
    out = tmp_path / "graph.json"
    assert main(["--mock", "build", "--scene", str(demo_path), "--out", str(out)]) == 0
    assert "3 carriers / 5 carried / 4 others" in capsys.readouterr().out
    assert json.loads(out.read_text(encoding='utf-8'))['carriers']


def test_run_writes_outputs(tmp_path, demo_path):
    out = tmp_path / "run"
    assert main(["--mock", "run", "--scene", str(demo_path), "--mode", "full", "--out", str(out)]) == 0
    for name in ("trace.jsonl", "metrics.csv", "graph_after.json", "summary.json"):
        assert (out / name).is_file()
    summary = json.loads((out / "summary.json").read_text(encoding='utf-8'))
    assert len(summary['tasks_sr']) == 5


def test_run_multiple_sequences(tmp_path, demo_path):
    out = tmp_path / "runs"
    args = ["--mock", "run", "--scene", str(demo_path), "--mode", "no-update", "--sequences", "2", "--out", str(out)]
    assert main(args) == 0
    assert (out / "trace_seq1.jsonl").is_file()
    assert (out / "metrics.csv").read_text(encoding='utf-8').startswith("sequence,task_idx")


def test_random_mode_requires_seed(tmp_path, demo_path, capsys):
    args = ["--mock", "run", "--scene", str(demo_path), "--mode", "only-carriers-random", "--out", str(tmp_path)]
    assert main(args) == 2
    assert "--seed" in capsys.readouterr().err


def test_unknown_mode_fails(tmp_path, demo_path):
    assert main(["--mock", "run", "--scene", str(demo_path), "--mode", "teleport", "--out", str(tmp_path)]) == 2


def test_query_from_scene(demo_path, capsys):
    assert main(["--mock", "query", "--scene", str(demo_path), "--text", "black cup", "--top-k", "2"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 2
    assert lines[0].split("\t")[1] == "cup_black"


def test_missing_scene_file_fails(tmp_path):
    assert main(["--mock", "build", "--scene", str(tmp_path / "none.json"), "--out", str(tmp_path / "g.json")]) == 2


def test_generate_then_render(tmp_path):
    scene = tmp_path / "scene.json"
    assert main(["generate", "--seed", "5", "--rooms", "2", "--out", str(scene)]) == 0
    svg = tmp_path / "plan.svg"
    assert main(["--mock", "render", "--scene", str(scene), "--out", str(svg)]) == 0
    assert b"<svg" in svg.read_bytes()
