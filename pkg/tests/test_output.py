import pandas as pd

from core.graph_io import load_graph, dumps_graph
from output.file_manager import FileManager
from output.report_charts import create_spl_curves, spl_curve_frame


def _summary():
    return pd.DataFrame([
        {'mode': 'full', 'task_idx': 'all', 'sr': 1.0, 'spl': 0.8, 'tasks_sr': None},
        {'mode': 'full', 'task_idx': '2', 'sr': 1.0, 'spl': 0.7, 'tasks_sr': 1.0},
        {'mode': 'full', 'task_idx': '1', 'sr': 1.0, 'spl': 0.9, 'tasks_sr': 1.0},
    ])


def test_trace_round_trip(tmp_path):
    files = FileManager(tmp_path / "out")
    records = [{'step': 0, 'b': 1, 'a': "컵"}, {'final': True}]
    path = files.write_trace(records)
    assert FileManager.read_trace(path) == records
    first_line = path.read_text(encoding='utf-8').splitlines()[0]
    assert first_line.index('"a"') < first_line.index('"b"')


def test_write_metrics_csv(tmp_path):
    files = FileManager(tmp_path)
    path = files.write_metrics([{'task_idx': 1, 'spl': 0.123456}], columns=['task_idx', 'spl'])
    assert path.read_text(encoding='utf-8') == "task_idx,spl\n1,0.1235\n"


def test_write_graph(tmp_path, demo):
    path = FileManager(tmp_path).write_graph(demo.graph)
    assert dumps_graph(load_graph(path)) == dumps_graph(demo.graph)


def test_spl_curve_frame_drops_overall_rows():
    frame = spl_curve_frame(_summary())
    assert list(frame['task_idx']) == [1, 2]


def test_write_bench(tmp_path):
    bench = pd.DataFrame([{'mode': 'full', 'task_idx': 1, 'spl': 0.9}])
    paths = FileManager(tmp_path).write_bench(bench, _summary())
    assert [p.name for p in paths] == ["bench.csv", "summary.csv", "spl_curves.html"]
    assert all(p.is_file() for p in paths)
    assert 'spl-curves' in create_spl_curves(_summary())
