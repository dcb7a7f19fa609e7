import numpy as np
import pytest

from simworld.metrics import TaskOutcome, compute_metrics, spl


@pytest.mark.parametrize("success, shortest, actual, expected", [
    (False, 5.0, 5.0, 0.0),
    (True, 5.0, 5.0, 1.0),
    (True, 10.0, 20.0, 0.5),
    (True, 0.0, 0.0, 1.0),
    (True, 0.0, 1.0, 0.0),
    (True, None, 3.0, 0.0),
    (True, 4.0, 3.0, 1.0),
])
def test_spl(success, shortest, actual, expected):
    assert spl(success, shortest, actual) == pytest.approx(expected)


def test_spl_rejects_negative():
    with pytest.raises(ValueError):
        spl(True, 1.0, -1.0)
    with pytest.raises(ValueError):
        spl(True, -1.0, 1.0)


def _seq(*pairs):
    return [TaskOutcome(s, v) for s, v in pairs]


def test_compute_metrics_values():
    traces = [
        _seq((True, 1.0), (True, 0.5), (False, 0.0)),
        _seq((True, 1.0), (False, 0.0), (True, 0.8)),
    ]
    tasks = [[0, 1, 2], [0, 1, 2]]
    report = compute_metrics(traces, tasks)
    assert report.sr == pytest.approx(4 / 6)
    assert report.spl_mean == pytest.approx(3.3 / 6)
    assert report.spl_by_task == pytest.approx((1.0, 0.25, 0.4))
    assert report.tasks_sr == pytest.approx((1.0, 0.5, 0.0))
    record = report.to_record()
    assert set(record) == {'sr', 'spl_mean', 'spl_by_task', 'tasks_sr'}


def test_tasks_sr_is_non_increasing():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n_seq, n_tasks = int(rng.integers(1, 6)), int(rng.integers(1, 8))
        traces = [
            _seq(*[(bool(rng.random() < 0.7), float(rng.random())) for _ in range(n_tasks)])
            for _ in range(n_seq)
        ]
        report = compute_metrics(traces, [list(range(n_tasks))] * n_seq)
        assert all(a >= b for a, b in zip(report.tasks_sr, report.tasks_sr[1:]))
        assert report.tasks_sr[0] == pytest.approx(np.mean([seq[0].success for seq in traces]))


def test_compute_metrics_rejects_missing_traces():
    with pytest.raises(ValueError):
        compute_metrics([_seq((True, 1.0))], [[0, 1]])
    with pytest.raises(ValueError):
        compute_metrics([[None]], [[0]])
    with pytest.raises(ValueError):
        compute_metrics([], [])
    with pytest.raises(ValueError):
        compute_metrics([_seq((True, 1.0))], [[0], [0]])
