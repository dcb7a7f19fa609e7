# src/simworld/bench.py
"""
실험 실행 모듈
장면 준비, 시퀀스 작업(프로세스 병렬 가능), 벤치마크/질의 벤치마크 집계
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from core.exceptions import SceneFormatError
from core.graph_io import dumps_graph, graph_from_document
from core.navigation import Mode
from core.scene_graph import CarrierRelationshipSceneGraph, build_graph, query
from generators.scene_generator import SuiteDoc, suite_scene_text
from providers.base import AffinityTable, Providers
from providers.factory import create_providers
from simworld.episode import RunParams
from simworld.metrics import MetricsReport, TaskOutcome, compute_metrics
from simworld.runner import run_sequence
from simworld.scene_schema import parse_scene
from simworld.world import SceneInputs, WorldModel, world_from_document

logger = logging.getLogger(__name__)

TASK_COLUMNS = ['task_idx', 'success', 'spl', 'actions', 'path_m']
BENCH_COLUMNS = ['mode', 'seed', 'scene', 'sequence'] + TASK_COLUMNS


@dataclass(eq=False)
class PreparedScene:
    world: WorldModel
    inputs: SceneInputs
    params: RunParams
    providers: Providers
    graph: CarrierRelationshipSceneGraph


def prepare_scene(
    scene_text: str,
    graph_text: Optional[str] = None,
    use_remote: Optional[bool] = None,
) -> PreparedScene:
    """장면 검증 -> provider 생성 -> 월드 생성 -> 오프라인 CRSG (또는 저장된 그래프)"""
    doc = parse_scene(scene_text)
    try:
        params = RunParams.from_overrides(doc.params.model_dump())
        affinity = AffinityTable.from_nested(doc.affinity_table.model_dump())
    except (TypeError, ValueError) as e:
        raise SceneFormatError("params", str(e)) from e
    providers = create_providers(affinity, use_remote, same_room_bonus=params.policy.same_room_bonus)
    world, inputs = world_from_document(doc, providers.embedder)
    if graph_text is not None:
        graph = graph_from_document(graph_text)
    else:
        graph = build_graph(inputs.objects, inputs.rooms, params.construction, providers, inputs.building_id)
    return PreparedScene(world, inputs, params, providers, graph)


@dataclass(frozen=True)
class SequenceJob:
    scene_text: str
    mode: str
    seed: int
    scene: str = "scene"
    sequence: int = 0
    graph_text: Optional[str] = None
    use_remote: Optional[bool] = None


@dataclass
class SequenceResult:
    job: SequenceJob
    records: List[dict] = field(default_factory=list)
    rows: List[dict] = field(default_factory=list)
    final_graph: str = ""

    @property
    def outcomes(self) -> List[TaskOutcome]:
        return [TaskOutcome(bool(r['success']), float(r['spl'])) for r in self.rows]


def run_job(job: SequenceJob) -> SequenceResult:
    """시퀀스 하나 실행 (프로세스 풀 작업 단위, 입력/출력 모두 직렬화 가능)"""
    prepared = prepare_scene(job.scene_text, job.graph_text, job.use_remote)
    traces, final_graph = run_sequence(
        prepared.world,
        prepared.graph,
        prepared.inputs.tasks,
        prepared.params,
        Mode.parse(job.mode),
        job.seed,
        prepared.providers,
        prepared.inputs.start,
        prepared.inputs.displacements,
    )
    result = SequenceResult(job, final_graph=dumps_graph(final_graph))
    for trace in traces:
        result.records.extend(trace.to_records())
        metrics = trace.metrics()
        result.rows.append({
            'task_idx': trace.task_index + 1,
            'success': metrics['success'],
            'spl': metrics['spl'],
            'actions': metrics['actions'],
            'path_m': metrics['path_m'],
        })
    return result


def run_jobs(jobs: Sequence[SequenceJob], parallel: int = 1) -> List[SequenceResult]:
    """입력 순서대로 결과 반환 (parallel > 1 이면 프로세스 풀)"""
    if parallel < 1:
        raise ValueError("parallel >= 1")
    if parallel == 1 or len(jobs) <= 1:
        return [run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=parallel) as executor:
        return list(executor.map(run_job, jobs))


def report_for(results: Sequence[SequenceResult]) -> MetricsReport:
    outcomes = [r.outcomes for r in results]
    return compute_metrics(outcomes, [r.rows for r in results])


def bench_jobs(
    suite: SuiteDoc,
    modes: Sequence[str],
    seeds: Sequence[int],
    use_remote: Optional[bool] = None,
) -> List[SequenceJob]:
    """모드 x 시드 x 장면 작업 목록 (생성 장면은 generator_seed + seed)"""
    jobs = []
    for mode in modes:
        Mode.parse(mode)
        for seed in seeds:
            for i, entry in enumerate(suite.scenes):
                label = entry.path or f"gen-{entry.generator_seed + seed}"
                jobs.append(SequenceJob(
                    scene_text=suite_scene_text(entry, seed),
                    mode=mode,
                    seed=int(seed),
                    scene=label,
                    sequence=i,
                    use_remote=use_remote,
                ))
    return jobs


def bench_frames(results: Sequence[SequenceResult]) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """(bench.csv 행, summary.csv 행)"""
    rows = []
    for result in results:
        job = result.job
        for row in result.rows:
            rows.append({'mode': job.mode, 'seed': job.seed, 'scene': job.scene, 'sequence': job.sequence, **row})
    bench = pd.DataFrame(rows, columns=BENCH_COLUMNS)

    summary_rows = []
    for mode in list(dict.fromkeys(r.job.mode for r in results)):
        report = report_for([r for r in results if r.job.mode == mode])
        per_task = bench[bench['mode'] == mode].groupby('task_idx').agg(sr=('success', 'mean'), spl=('spl', 'mean'))
        summary_rows.append({'mode': mode, 'task_idx': 'all', 'sr': report.sr, 'spl': report.spl_mean, 'tasks_sr': None})
        for task_idx, stats in per_task.iterrows():
            i = int(task_idx)
            tasks_sr = report.tasks_sr[i - 1] if i <= len(report.tasks_sr) else None
            summary_rows.append({
                'mode': mode,
                'task_idx': str(i),
                'sr': float(stats['sr']),
                'spl': float(stats['spl']),
                'tasks_sr': tasks_sr,
            })
    summary = pd.DataFrame(summary_rows, columns=['mode', 'task_idx', 'sr', 'spl', 'tasks_sr'])
    return bench, summary


def query_bench(suite: SuiteDoc, use_remote: Optional[bool] = None, seed_offset: int = 0) -> pd.DataFrame:
    """각 장면 queries의 top-1 정확도 (kind별)"""
    rows = []
    for entry in suite.scenes:
        text = suite_scene_text(entry, seed_offset)
        prepared = prepare_scene(text, use_remote=use_remote)
        for q in prepared.inputs.queries:
            feature = "visual" if q['kind'] == 'visual' else "text"
            ranked = query(prepared.graph, q['text'], 1, prepared.providers, feature)
            top = ranked[0][0] if ranked else None
            rows.append({
                'scene': prepared.inputs.name,
                'kind': q['kind'],
                'text': q['text'],
                'expect': q['expect'],
                'top1': top,
                'correct': int(top == q['expect']),
            })
    return pd.DataFrame(rows, columns=['scene', 'kind', 'text', 'expect', 'top1', 'correct'])


def accuracy_by_kind(results: pd.DataFrame) -> Dict[str, float]:
    if results.empty:
        return {}
    return {str(k): float(v) for k, v in results.groupby('kind')['correct'].mean().items()}
