# src/simworld/episode.py
"""
에피소드 실행 모듈
정책 선택 -> 경로 이동 및 관측 -> CRSG 갱신 -> 목표 판정 -> 상태 전이 (Stop까지)
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Set, Tuple

import numpy as np

from core.adaptation import (
    GraphDelta,
    MatchParams,
    ObservedObject,
    carrier_subset_ahead,
    match_carriers,
    observed_footprint,
    update_carried,
)
from core.features import cosine_similarity
from core.geometry import Aabb, Pose, Vec2, path_length
from core.navigation import (
    ActionKind,
    Mode,
    NavAction,
    NavCommand,
    NavState,
    ObservationEffects,
    PolicyParams,
    TargetVerdict,
    VerificationParams,
    apply_transition,
    choose_action,
    collect_observation_effects,
    initial_state,
    verify_target,
)
from core.scene_graph import CarrierRelationshipSceneGraph, ConstructionParams, best_carrier
from providers.base import Providers
from providers.factory import create_providers
from simworld.metrics import spl
from simworld.world import WorldModel, approach_distance, approach_point, facing, sense

logger = logging.getLogger(__name__)

# 위치만 아는 후보의 접근 목표 상자 반변 (m)
CANDIDATE_BOX_HALF = 0.05


def _r(v: float) -> float:
    return round(float(v), 4)


@dataclass(frozen=True)
class RunParams:
    """에피소드 파라미터 묶음 (장면 params 섹션으로 덮어쓰기)"""

    policy: PolicyParams = field(default_factory=PolicyParams)
    verification: VerificationParams = field(default_factory=VerificationParams)
    matching: MatchParams = field(default_factory=MatchParams)
    construction: ConstructionParams = field(default_factory=ConstructionParams)

    @classmethod
    def from_overrides(cls, params: Optional[dict] = None) -> "RunParams":
        params = params or {}
        return cls(
            policy=PolicyParams.from_overrides(params.get('policy')),
            verification=VerificationParams.from_overrides(params.get('verification')),
            matching=MatchParams.from_overrides(params.get('matching')),
            construction=ConstructionParams.from_overrides(params.get('construction')),
        )


@dataclass(frozen=True)
class ObservationFrame:
    pose: Pose
    objects: Tuple[ObservedObject, ...]
    carriers_in_view: frozenset


@dataclass
class StepRecord:
    step: int
    state_summary: dict
    action: dict
    path: List[Vec2] = field(default_factory=list)
    observations: Set[str] = field(default_factory=set)
    graph_delta: GraphDelta = field(default_factory=GraphDelta)
    verdicts: List[TargetVerdict] = field(default_factory=list)

    @property
    def path_m(self) -> float:
        return path_length(self.path) if len(self.path) > 1 else 0.0

    def to_record(self) -> dict:
        return {
            'step': self.step,
            'state_summary': self.state_summary,
            'action': self.action,
            'path_m': _r(self.path_m),
            'path': [[_r(p.x), _r(p.y)] for p in self.path],
            'observations': sorted(self.observations),
            'graph_delta': self.graph_delta.to_record(),
            'verdicts': [v.to_record() for v in self.verdicts],
        }


@dataclass
class EpisodeTrace:
    task_index: int
    target_id: str
    command: str
    mode: str
    steps: List[StepRecord] = field(default_factory=list)
    found: bool = False
    confirmed_id: Optional[str] = None
    start: Optional[Pose] = None
    end: Optional[Pose] = None
    shortest_m: Optional[float] = None
    graph_version: int = 0

    @property
    def success(self) -> bool:
        return self.found and self.confirmed_id == self.target_id

    @property
    def path_m(self) -> float:
        return sum(s.path_m for s in self.steps)

    @property
    def actions(self) -> int:
        return sum(1 for s in self.steps if s.action['kind'] != ActionKind.STOP.value)

    @property
    def spl(self) -> float:
        return spl(self.success, self.shortest_m, self.path_m)

    def metrics(self) -> dict:
        return {
            'success': int(self.success),
            'spl': _r(self.spl),
            'actions': self.actions,
            'path_m': _r(self.path_m),
            'shortest_m': None if self.shortest_m is None else _r(self.shortest_m),
        }

    def to_records(self) -> List[dict]:
        records = [s.to_record() for s in self.steps]
        records.append({
            'final': True,
            'task_index': self.task_index,
            'target': self.target_id,
            'command': self.command,
            'mode': self.mode,
            'confirmed': self.confirmed_id,
            'graph_version': self.graph_version,
            'end_pose': None if self.end is None else [_r(self.end.position.x), _r(self.end.position.y), round(self.end.yaw, 6)],
            'metrics': self.metrics(),
        })
        return records


class _Episode:
    """한 에피소드의 가변 상태 (그래프는 호출자 소유, 갱신 모드에서 직접 수정)"""

    def __init__(self, world, graph, command, params, mode, providers):
        self.world = world
        self.graph = graph
        self.command = command
        self.params = params
        self.mode = mode
        self.providers = providers
        self.verification = params.verification.for_mode(mode)
        self.verified: Set[str] = set()
        self.rejected: Set[str] = set()
        self.confirmed: Optional[ObservedObject] = None

    # 관측 한 번: 캐리어 매칭, 분류, (모드에 따라) 갱신, 목표 판정
    def observe(self, pose: Pose, record: StepRecord) -> ObservationFrame:
        world, graph, params = self.world, self.graph, self.params
        observations = sense(world, pose)
        matched = match_carriers(observations, carrier_subset_ahead(graph, pose), graph, params.matching)
        carriers = [graph.objects[c] for c in sorted(set(matched.values()))]

        classified = []
        for idx, obs in enumerate(observations):
            if idx not in matched:
                obs = replace(obs, carrier_match=best_carrier(obs, carriers, params.construction))
            classified.append(obs)
        frame = ObservationFrame(pose, tuple(classified), frozenset(matched.values()))
        record.observations.update(o.track_id for o in classified)

        if self.mode.updates_graph:
            for carrier in carriers:
                on_it = [o for o in classified if o.carrier_match == carrier.id]
                region = observed_footprint(pose, world.sensor, world.walls, carrier.aabb, world.nav_grid.resolution)
                record.graph_delta.extend(
                    update_carried(graph, carrier.id, on_it, params.matching, region, params.construction)
                )

        matched_ids = set(matched)
        for idx, obs in enumerate(classified):
            if self.confirmed is not None:
                break
            if idx in matched_ids or obs.track_id in self.verified:
                continue
            if obs.mean_depth > world.sensor.observe_radius_r:
                continue
            if cosine_similarity(obs.text_feature, self.command.query_vector) <= params.policy.sigma1:
                continue
            self.verified.add(obs.track_id)
            verdict = verify_target(self.command, obs, self.providers, self.verification)
            record.verdicts.append(verdict)
            if verdict.accepted:
                self.confirmed = obs
                logger.debug(f"목표 확인: {obs.track_id}")
            else:
                self.rejected.add(obs.track_id)
        return frame

    def walk(self, path: List[Vec2], goal: Vec2, pose: Pose, record: StepRecord, frames: list) -> Pose:
        """경로를 따라 이동하며 sense_every 간격과 마지막 지점에서 관측 (확인 시 중단)"""
        every = self.world.sensor.sense_every
        if not record.path:
            record.path.append(path[0])
        for i in range(1, len(path)):
            prev, wp = path[i - 1], path[i]
            pose = Pose(wp, math.atan2(wp.y - prev.y, wp.x - prev.x))
            record.path.append(wp)
            if i % every == 0 or i == len(path) - 1:
                frames.append(self.observe(pose, record))
                if self.confirmed is not None:
                    return pose
        pose = facing(pose.position, goal, pose.yaw)
        frames.append(self.observe(pose, record))
        return pose

    def approach_confirmed(self, pose: Pose, record: StepRecord) -> Pose:
        """확인된 객체 앞으로 이동 (추가 관측 없음)"""
        goal = approach_point(self.world, self.confirmed.aabb, pose.position)
        target = self.confirmed.centroid.xy
        if goal is None:
            return facing(pose.position, target, pose.yaw)
        _, path = goal
        record.path.extend(path[1:])
        return facing(path[-1], target, pose.yaw)


def _candidate_box(c) -> Aabb:
    return Aabb.around(c.position, CANDIDATE_BOX_HALF)


def _refresh_distances(state: NavState, world: WorldModel) -> NavState:
    """후보 d를 현재 위치에서 계획 경로 길이로 갱신 (도달 불가 후보는 제거)"""
    refreshed = []
    for c in state.candidates:
        d = approach_distance(world, _candidate_box(c), state.pose.position)
        if d is None:
            logger.info(f"도달 불가 후보 제외: {c.object_id}")
            continue
        refreshed.append(replace(c, d=d))
    return replace(state, candidates=tuple(refreshed))


def _action_goal(action: NavAction, state: NavState, graph: CarrierRelationshipSceneGraph) -> Aabb:
    if action.kind is ActionKind.EXPLORE:
        return graph.objects[action.arg].aabb
    return _candidate_box(state.candidate(action.arg))


def shortest_length(world: WorldModel, target_id: str, start: Vec2) -> Optional[float]:
    """시작 위치에서 실제 목표 접근 지점까지 최단 경로 길이"""
    goal = approach_point(world, world.objects[target_id].aabb, start)
    return None if goal is None else path_length(goal[1])


def run_episode(
    world: WorldModel,
    graph: CarrierRelationshipSceneGraph,
    command: NavCommand,
    params: RunParams,
    mode=Mode.FULL,
    seed: int = 0,
    providers: Optional[Providers] = None,
    start: Optional[Pose] = None,
    target_id: Optional[str] = None,
    task_index: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> EpisodeTrace:
    """한 명령에 대해 Stop까지 정책 실행 (갱신 모드에서 graph를 직접 수정)"""
    mode = Mode.parse(mode)
    if providers is None:
        providers = create_providers()
    if rng is None:
        rng = np.random.default_rng(seed)
    if command.query_vector is None:
        raise ValueError("해석되지 않은 명령 (make_command 사용)")
    if start is None:
        raise ValueError("시작 자세가 필요함")
    target_id = target_id or command.resolved_target_id

    episode = _Episode(world, graph, command, params, mode, providers)
    state = initial_state(start, graph, command, params.policy)
    bound = len(state.unexplored_carriers) + sum(1 for c in state.candidates if c.carrier_id is None)
    trace = EpisodeTrace(
        task_index=task_index,
        target_id=target_id,
        command=command.query_text or command.text or "",
        mode=mode.value,
        start=start,
        shortest_m=shortest_length(world, target_id, start.position) if target_id in world.objects else None,
    )

    while True:
        state = _refresh_distances(state, world)
        action = choose_action(state, graph, command, providers, params.policy, mode, rng)
        record = StepRecord(state.step, state.to_record(), action.to_record())
        trace.steps.append(record)
        if action.kind is ActionKind.STOP:
            break
        if state.step >= bound:
            raise RuntimeError(f"행동 수가 종료 한계({bound})를 넘음")

        goal_box = _action_goal(action, state, graph)
        goal = approach_point(world, goal_box, state.pose.position)
        if goal is None:
            logger.info(f"도달 불가, 탐색 완료로 처리: {action.kind.value} {action.arg}")
            state = apply_transition(state, action, ObservationEffects())
            continue

        frames: List[ObservationFrame] = []
        pose = episode.walk(goal[1], goal_box.center.xy, state.pose, record, frames)
        if episode.confirmed is not None:
            pose = episode.approach_confirmed(pose, record)

        effects = collect_observation_effects(
            state, graph, frames, command, params.policy,
            world.sensor.observe_radius_r, excluded=episode.rejected,
        )
        state = apply_transition(
            state, action, effects, pose=pose, found=1 if episode.confirmed is not None else None,
        )
        if record.graph_delta:
            logger.debug(f"step {record.step} graph delta: {record.graph_delta.to_record()}")

    trace.found = state.found == 1
    trace.confirmed_id = episode.confirmed.track_id if episode.confirmed is not None else None
    trace.end = state.pose
    trace.graph_version = graph.version
    logger.info(
        f"task {task_index} ({trace.command}): success={trace.success} "
        f"actions={trace.actions} path={trace.path_m:.2f}m spl={trace.spl:.3f}"
    )
    return trace
