# src/core/adaptation.py
"""
CRSG 온라인 갱신 모듈
진행 방향 캐리어 부분집합, 캐리어 매칭, 피캐리어 추가/제거 (부분 관측 보호)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.config import Config
from core.features import Swatch, cosine_similarity
from core.geometry import Aabb, OccupancyGrid, Pose, SensorSpec, Vec2, Vec3, in_frustum
from core.scene_graph import (
    CarrierRelationshipSceneGraph,
    ConstructionParams,
    SceneObject,
    is_carried_by,
)
from utils.utils import apply_overrides, caption_tokens

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ObservedObject:
    """센서가 본 객체 한 개 (track_id는 인식 트랙 id)"""

    track_id: str
    aabb: Aabb
    captions: Mapping[str, int]
    text_feature: np.ndarray = field(repr=False)
    visual_feature: np.ndarray = field(repr=False)
    appearance: Swatch = field(repr=False)
    mean_depth: float
    carrier_match: Optional[str] = None

    def __post_init__(self):
        if not self.mean_depth > 0:
            raise ValueError(f"mean_depth > 0 이어야 함: {self.mean_depth}")

    @property
    def id(self) -> str:
        return self.track_id

    @property
    def centroid(self) -> Vec3:
        return self.aabb.center

    @property
    def tokens(self) -> List[str]:
        return caption_tokens(self.captions)


@dataclass(frozen=True)
class MatchParams:
    max_centroid_dist: float = Config.DEFAULT_MATCHING['max_centroid_dist']
    size_ratio_lo: float = Config.DEFAULT_MATCHING['size_ratio_lo']
    size_ratio_hi: float = Config.DEFAULT_MATCHING['size_ratio_hi']
    min_text_sim: float = Config.DEFAULT_MATCHING['min_text_sim']
    guard_dist: float = Config.DEFAULT_MATCHING['guard_dist']

    def __post_init__(self):
        if not (self.size_ratio_lo <= 1.0 <= self.size_ratio_hi):
            raise ValueError("size_ratio_lo <= 1 <= size_ratio_hi 이어야 함")
        if self.max_centroid_dist <= 0 or self.guard_dist < 0:
            raise ValueError("max_centroid_dist > 0, guard_dist >= 0")

    @classmethod
    def from_overrides(cls, overrides: Optional[Mapping] = None) -> "MatchParams":
        return apply_overrides(cls(), overrides)


@dataclass
class GraphDelta:
    added: List[Tuple[str, SceneObject]] = field(default_factory=list)
    removed: List[Tuple[str, SceneObject]] = field(default_factory=list)
    relinked: List[str] = field(default_factory=list)
    unchanged_count: int = 0

    def __bool__(self):
        return bool(self.added or self.removed)

    def extend(self, other: "GraphDelta"):
        self.added.extend(other.added)
        self.removed.extend(other.removed)
        self.relinked.extend(other.relinked)
        self.unchanged_count += other.unchanged_count

    def to_record(self) -> dict:
        def entry(carrier_id, obj):
            c = obj.centroid
            return {
                'carrier': carrier_id,
                'id': obj.id,
                'label': obj.label,
                'xy': [round(c.x, 4), round(c.y, 4)],
            }

        return {
            'added': [entry(c, o) for c, o in self.added],
            'removed': [entry(c, o) for c, o in self.removed],
            'relinked': sorted(self.relinked),
            'unchanged': self.unchanged_count,
        }


def carrier_subset_ahead(graph: CarrierRelationshipSceneGraph, pose: Pose) -> List[str]:
    """진행 방향 반평면(내적 >= 0)에 있는 캐리어"""
    hx, hy = math.cos(pose.yaw), math.sin(pose.yaw)
    subset = []
    for carrier_id in sorted(graph.carriers):
        c = graph.objects[carrier_id].centroid
        if hx * (c.x - pose.position.x) + hy * (c.y - pose.position.y) >= 0.0:
            subset.append(carrier_id)
    return subset


def _volume_ratio(a: Aabb, b: Aabb) -> float:
    vb = b.volume
    if vb <= 0:
        return math.inf if a.volume > 0 else 1.0
    return a.volume / vb


def is_same_object(observed, recorded, params: MatchParams) -> Tuple[bool, float]:
    """(중심 거리, 부피 비, 텍스트 유사도) 매칭 조건과 중심 거리"""
    dist = observed.centroid.xy.distance_to(recorded.centroid.xy)
    dz = observed.centroid.z - recorded.centroid.z
    dist = math.hypot(dist, dz)
    if dist > params.max_centroid_dist:
        return False, dist
    ratio = _volume_ratio(observed.aabb, recorded.aabb)
    if not (params.size_ratio_lo <= ratio <= params.size_ratio_hi):
        return False, dist
    if cosine_similarity(observed.text_feature, recorded.text_feature) < params.min_text_sim:
        return False, dist
    return True, dist


def _greedy_one_to_one(pairs: List[Tuple[float, int, str]]) -> Dict[int, str]:
    """(거리, 관측 index, 기록 id) 를 거리 오름차순으로 1:1 배정"""
    assigned: Dict[int, str] = {}
    taken = set()
    for _, obs_idx, rec_id in sorted(pairs):
        if obs_idx in assigned or rec_id in taken:
            continue
        assigned[obs_idx] = rec_id
        taken.add(rec_id)
    return assigned


def match_carriers(
    observations: Sequence[ObservedObject],
    subset: Sequence[str],
    graph: CarrierRelationshipSceneGraph,
    params: MatchParams,
) -> Dict[int, str]:
    """관측 index -> 캐리어 id (가까운 순 greedy 1:1)"""
    unknown = sorted(set(subset) - graph.carriers)
    if unknown:
        raise ValueError(f"그래프 캐리어가 아닌 id: {unknown}")
    pairs = []
    for idx, obs in enumerate(observations):
        for carrier_id in subset:
            ok, dist = is_same_object(obs, graph.objects[carrier_id], params)
            if ok:
                pairs.append((dist, idx, carrier_id))
    return _greedy_one_to_one(pairs)


def observed_footprint(
    pose: Pose,
    sensor: SensorSpec,
    walls: OccupancyGrid,
    carrier: Aabb,
    spacing: float,
) -> List[Vec2]:
    """캐리어 발자국 위 샘플점 중 이번 관측 시야에 든 점"""
    nx = max(int(math.ceil((carrier.max.x - carrier.min.x) / spacing)), 1)
    ny = max(int(math.ceil((carrier.max.y - carrier.min.y) / spacing)), 1)
    points = []
    for i in range(nx + 1):
        x = min(carrier.min.x + i * spacing, carrier.max.x)
        for j in range(ny + 1):
            y = min(carrier.min.y + j * spacing, carrier.max.y)
            p = Vec2(x, y)
            if in_frustum(pose, sensor, p, walls):
                points.append(p)
    return points


def _guard_allows_removal(recorded: SceneObject, region: Sequence[Vec2], guard_dist: float) -> bool:
    return any(recorded.aabb.distance_xy(p) <= guard_dist for p in region)


def _object_from_observation(obs: ObservedObject, obj_id: str, room_id: Optional[str]) -> SceneObject:
    return SceneObject(
        id=obj_id,
        aabb=obs.aabb,
        captions=obs.captions,
        text_feature=obs.text_feature,
        visual_feature=obs.visual_feature,
        appearance=obs.appearance,
        room_id=room_id,
    )


def _relink_candidate(
    graph: CarrierRelationshipSceneGraph,
    obs: ObservedObject,
    params: MatchParams,
    exclude: set,
) -> Optional[str]:
    """보관된(제거된) 객체 중 텍스트 유사도가 가장 높은 것"""
    best = None
    for obj_id in sorted(set(graph.archive) - exclude):
        sim = cosine_similarity(obs.text_feature, graph.archive[obj_id].text_feature)
        if sim >= params.min_text_sim and (best is None or sim > best[0]):
            best = (sim, obj_id)
    return best[1] if best else None


def _moved_candidate(
    graph: CarrierRelationshipSceneGraph,
    carrier_id: str,
    obs: ObservedObject,
    params: MatchParams,
) -> Optional[Tuple[str, str]]:
    """다른 캐리어에 아직 기록된 객체 중 위치만 다른 것 -> (이전 캐리어, id)

    중심 거리 조건 없이 부피 비와 텍스트 유사도만 봄
    """
    best = None
    for other_id in sorted(graph.carried):
        if other_id == carrier_id:
            continue
        for obj_id in sorted(graph.carried[other_id]):
            recorded = graph.objects[obj_id]
            ratio = _volume_ratio(obs.aabb, recorded.aabb)
            if not (params.size_ratio_lo <= ratio <= params.size_ratio_hi):
                continue
            sim = cosine_similarity(obs.text_feature, recorded.text_feature)
            if sim >= params.min_text_sim and (best is None or sim > best[0]):
                best = (sim, other_id, obj_id)
    return (best[1], best[2]) if best else None


def _matches_elsewhere(graph: CarrierRelationshipSceneGraph, carrier_id: str, obs: ObservedObject, params: MatchParams) -> bool:
    for other_id, members in graph.carried.items():
        if other_id == carrier_id:
            continue
        for obj_id in members:
            if is_same_object(obs, graph.objects[obj_id], params)[0]:
                return True
    return False


def update_carried(
    graph: CarrierRelationshipSceneGraph,
    carrier_id: str,
    observations_on_it: Sequence[ObservedObject],
    params: MatchParams,
    observed_region: Sequence[Vec2],
    construction: Optional[ConstructionParams] = None,
) -> GraphDelta:
    """관측으로 캐리어의 피캐리어 집합 갱신 (변경 시 version 증가)"""
    if carrier_id not in graph.carriers:
        raise ValueError(f"그래프에 없는 캐리어: {carrier_id}")
    construction = construction or ConstructionParams()
    carrier = graph.objects[carrier_id]

    on_carrier = [o for o in observations_on_it if o.track_id != carrier_id and is_carried_by(carrier, o, construction)]
    recorded_ids = sorted(graph.carried.get(carrier_id, set()))

    pairs = []
    for idx, obs in enumerate(on_carrier):
        for rec_id in recorded_ids:
            ok, dist = is_same_object(obs, graph.objects[rec_id], params)
            if ok:
                pairs.append((dist, idx, rec_id))
    matched = _greedy_one_to_one(pairs)
    matched_recorded = set(matched.values())

    delta = GraphDelta(unchanged_count=len(matched))

    for rec_id in recorded_ids:
        if rec_id in matched_recorded:
            continue
        recorded = graph.objects[rec_id]
        if _guard_allows_removal(recorded, observed_region, params.guard_dist):
            delta.removed.append((carrier_id, recorded))
        else:
            delta.unchanged_count += 1

    removed_now = {recorded.id for _, recorded in delta.removed}
    for carrier_key, recorded in delta.removed:
        graph.carried[carrier_key].discard(recorded.id)
        del graph.objects[recorded.id]
        graph.archive[recorded.id] = recorded

    for idx, obs in enumerate(on_carrier):
        if idx in matched or _matches_elsewhere(graph, carrier_id, obs, params):
            continue
        obj_id = _relink_candidate(graph, obs, params, removed_now)
        moved = None if obj_id is not None else _moved_candidate(graph, carrier_id, obs, params)
        if obj_id is not None:
            del graph.archive[obj_id]
            delta.relinked.append(obj_id)
        elif moved is not None:
            old_carrier, obj_id = moved
            graph.carried[old_carrier].discard(obj_id)
            delta.relinked.append(obj_id)
            logger.debug(f"옮겨진 객체 재연결 {obj_id}: {old_carrier} -> {carrier_id}")
        else:
            obj_id = graph.mint_observed_id()
        new_obj = _object_from_observation(obs, obj_id, carrier.room_id)
        graph.objects[obj_id] = new_obj
        graph.carried.setdefault(carrier_id, set()).add(obj_id)
        delta.added.append((carrier_id, new_obj))

    if delta:
        graph.version += 1
        logger.debug(
            f"CRSG 갱신 {carrier_id}: +{[o.id for _, o in delta.added]} "
            f"-{[o.id for _, o in delta.removed]} (version={graph.version})"
        )
    return delta
