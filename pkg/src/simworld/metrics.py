# src/simworld/metrics.py
"""
평가 지표 모듈
SR, SPL, Tasks_SR(i)
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np


def spl(success: bool, shortest: Optional[float], actual: float) -> float:
    """success * l / max(p, l) (l == 0 이면 p == 0 일 때만 1)"""
    if actual < 0 or (shortest is not None and shortest < 0):
        raise ValueError("경로 길이는 음수일 수 없음")
    if not success or shortest is None:
        return 0.0
    if shortest == 0.0:
        return 1.0 if actual == 0.0 else 0.0
    return shortest / max(actual, shortest)


@dataclass(frozen=True)
class TaskOutcome:
    success: bool
    spl: float


@dataclass(frozen=True)
class MetricsReport:
    sr: float
    spl: Tuple[Tuple[float, ...], ...]
    spl_mean: float
    spl_by_task: Tuple[float, ...]
    tasks_sr: Tuple[float, ...]

    def to_record(self) -> dict:
        return {
            'sr': round(self.sr, 6),
            'spl_mean': round(self.spl_mean, 6),
            'spl_by_task': [round(v, 6) for v in self.spl_by_task],
            'tasks_sr': [round(v, 6) for v in self.tasks_sr],
        }


def compute_metrics(traces: Sequence[Sequence], tasks: Sequence[Sequence]) -> MetricsReport:
    """시퀀스별 에피소드 결과(success, spl 속성)와 과제 목록으로 지표 계산"""
    if len(traces) != len(tasks):
        raise ValueError(f"시퀀스 수 불일치: traces={len(traces)}, tasks={len(tasks)}")
    if not tasks:
        raise ValueError("과제가 없음")
    for i, (seq_traces, seq_tasks) in enumerate(zip(traces, tasks)):
        if len(seq_traces) != len(seq_tasks) or any(t is None for t in seq_traces):
            raise ValueError(f"시퀀스 {i}: 과제 {len(seq_tasks)}개에 trace {len(seq_traces)}개 (누락)")

    successes: List[List[bool]] = [[bool(t.success) for t in seq] for seq in traces]
    spls = tuple(tuple(float(t.spl) for t in seq) for seq in traces)

    flat_success = [s for seq in successes for s in seq]
    flat_spl = [v for seq in spls for v in seq]
    sr = float(np.mean(flat_success)) if flat_success else 0.0
    spl_mean = float(np.mean(flat_spl)) if flat_spl else 0.0

    longest = max(len(seq) for seq in spls)
    spl_by_task = tuple(
        float(np.mean([seq[i] for seq in spls if len(seq) > i])) for i in range(longest)
    )

    shortest = min(len(seq) for seq in successes)
    tasks_sr = tuple(
        float(np.mean([all(seq[:i]) for seq in successes])) for i in range(1, shortest + 1)
    )
    return MetricsReport(sr, spls, spl_mean, spl_by_task, tasks_sr)
