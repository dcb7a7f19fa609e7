# src/simworld/runner.py
"""
장기 과제 시퀀스 실행 모듈
과제마다 객체 이동 적용 -> 명령 해석 -> 에피소드 실행, 종료 자세를 다음 시작 자세로 연결
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from core.geometry import Pose
from core.navigation import Mode, make_command
from core.scene_graph import CarrierRelationshipSceneGraph
from providers.base import Providers
from simworld.episode import EpisodeTrace, RunParams, run_episode
from simworld.world import DisplacementEvent, NavTask, WorldModel, apply_displacements

logger = logging.getLogger(__name__)


def run_sequence(
    world: WorldModel,
    graph: CarrierRelationshipSceneGraph,
    tasks: Sequence[NavTask],
    params: RunParams,
    mode,
    seed: int,
    providers: Providers,
    start: Pose,
    displacements: Sequence[DisplacementEvent] = (),
) -> Tuple[List[EpisodeTrace], CarrierRelationshipSceneGraph]:
    """과제 시퀀스 실행 (world, graph 원본은 변경하지 않음)

    갱신 모드는 그래프를 과제 사이에 이어 쓰고, no-update는 매 과제 오프라인 그래프에서 다시 시작한다.
    """
    mode = Mode.parse(mode)
    world = world.copy()
    working = graph.clone()
    traces: List[EpisodeTrace] = []
    pose = start

    for k, task in enumerate(tasks):
        apply_displacements(world, displacements, k)
        world.rng = np.random.default_rng([seed, k, 1])
        if not mode.updates_graph:
            working = graph.clone()

        command = make_command(working, providers, task.text, task.image, task.hint)
        trace = run_episode(
            world,
            working,
            command,
            params,
            mode=mode,
            providers=providers,
            start=pose,
            target_id=task.target_id,
            task_index=k,
            rng=np.random.default_rng([seed, k]),
        )
        traces.append(trace)
        pose = trace.end

    successes = sum(t.success for t in traces)
    logger.info(f"시퀀스 완료 ({mode.value}, seed={seed}): {successes}/{len(traces)} 성공")
    return traces, working
