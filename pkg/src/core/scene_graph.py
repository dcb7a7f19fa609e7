# src/core/scene_graph.py
"""
캐리어 관계 장면 그래프 (CRSG) 모듈
건물 -> 방 -> 캐리어 레이어 -> 피캐리어 레이어 구축 및 질의
"""

import logging
import re
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from config.config import Config
from core.exceptions import ConstructionError, ProviderError
from core.features import Swatch, cosine_similarity, embed_text, visual_feature
from core.geometry import Aabb, RoomPolygon, Vec3, aabb_overlap_ratio_xy, point_in_polygon
from providers.base import CarrierCandidateSummary, Providers, TextEmbedder
from utils.utils import apply_overrides, caption_tokens, tokenize, top_captions

logger = logging.getLogger(__name__)

# "<X> on the <Y>" 형태의 캐리어 한정 질의
_ON_QUERY_RE = re.compile(r"^\s*(?:(?:a|an|the)\s+)?(?P<x>.+?)\s+on\s+(?:(?:a|an|the)\s+)?(?P<y>.+?)\s*$", re.IGNORECASE)


@dataclass(frozen=True, eq=False)
class SceneObject:
    id: str
    aabb: Aabb
    captions: Mapping[str, int]
    text_feature: np.ndarray = field(repr=False)
    visual_feature: np.ndarray = field(repr=False)
    appearance: Swatch = field(repr=False)
    room_id: Optional[str] = None

    def __post_init__(self):
        if not self.captions:
            raise ValueError(f"객체 '{self.id}' 캡션 리스트가 비어 있음")
        object.__setattr__(self, 'captions', dict(self.captions))
        norm = float(np.linalg.norm(self.text_feature))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"객체 '{self.id}' text_feature가 단위벡터가 아님 (norm={norm:.6f})")

    @property
    def centroid(self) -> Vec3:
        return self.aabb.center

    @property
    def tokens(self) -> List[str]:
        return caption_tokens(self.captions)

    @property
    def top_captions(self) -> List[str]:
        return top_captions(self.captions, 3)

    @property
    def label(self) -> str:
        return self.top_captions[0]

    def __eq__(self, other):
        if not isinstance(other, SceneObject):
            return NotImplemented
        return (
            self.id == other.id
            and self.aabb == other.aabb
            and self.captions == other.captions
            and np.array_equal(self.text_feature, other.text_feature)
            and np.array_equal(self.visual_feature, other.visual_feature)
            and self.appearance == other.appearance
            and self.room_id == other.room_id
        )

    __hash__ = None


def make_scene_object(
    obj_id: str,
    aabb: Aabb,
    captions: Mapping[str, int],
    appearance: Swatch,
    embedder: TextEmbedder,
    room_id: Optional[str] = None,
) -> SceneObject:
    """캡션에서 텍스트/시각 특징을 계산해 SceneObject 생성"""
    tokens = caption_tokens(captions)
    if not tokens:
        raise ValueError(f"객체 '{obj_id}' 캡션에서 토큰을 얻지 못함")
    return SceneObject(
        id=obj_id,
        aabb=aabb,
        captions=captions,
        text_feature=embedder.embed(tokens),
        visual_feature=visual_feature(tokens, appearance),
        appearance=appearance,
        room_id=room_id,
    )


@dataclass(frozen=True)
class ConstructionParams:
    carrier_query_text: str = Config.DEFAULT_CONSTRUCTION['carrier_query_text']
    sigma: float = Config.DEFAULT_CONSTRUCTION['sigma']
    min_footprint_area: float = Config.DEFAULT_CONSTRUCTION['min_footprint_area']
    max_base_height: float = Config.DEFAULT_CONSTRUCTION['max_base_height']
    xy_overlap_min: float = Config.DEFAULT_CONSTRUCTION['xy_overlap_min']
    vertical_gap_lo: float = Config.DEFAULT_CONSTRUCTION['vertical_gap_lo']
    vertical_gap_hi: float = Config.DEFAULT_CONSTRUCTION['vertical_gap_hi']
    max_center_distance_factor: float = Config.DEFAULT_CONSTRUCTION['max_center_distance_factor']

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0):
            raise ValueError("sigma는 (0, 1) 범위")
        if not (0.0 < self.xy_overlap_min <= 1.0):
            raise ValueError("xy_overlap_min은 (0, 1] 범위")
        if self.vertical_gap_lo > self.vertical_gap_hi:
            raise ValueError("vertical_gap_lo <= vertical_gap_hi 이어야 함")

    @classmethod
    def from_overrides(cls, overrides: Optional[Mapping] = None) -> "ConstructionParams":
        return apply_overrides(cls(), overrides)


@dataclass
class CarrierRelationshipSceneGraph:
    """CRSG: carriers / carried / others 가 객체 id 집합을 분할"""

    building_id: str = "building"
    rooms: List[RoomPolygon] = field(default_factory=list)
    objects: Dict[str, SceneObject] = field(default_factory=dict)
    carriers: Set[str] = field(default_factory=set)
    carried: Dict[str, Set[str]] = field(default_factory=dict)
    others: Set[str] = field(default_factory=set)
    version: int = 0
    # 제거된 객체 (재관측 시 id 재연결용)
    archive: Dict[str, SceneObject] = field(default_factory=dict)
    next_observed: int = 1

    def carrier_of(self, obj_id: str) -> Optional[str]:
        for carrier_id in sorted(self.carried):
            if obj_id in self.carried[carrier_id]:
                return carrier_id
        return None

    def room_of(self, obj_id: str) -> Optional[str]:
        return self.objects[obj_id].room_id

    def clone(self) -> "CarrierRelationshipSceneGraph":
        # 특징/스와치 배열은 읽기 전용이므로 얕은 복사로 충분
        return CarrierRelationshipSceneGraph(
            building_id=self.building_id,
            rooms=list(self.rooms),
            objects=dict(self.objects),
            carriers=set(self.carriers),
            carried={k: set(v) for k, v in self.carried.items()},
            others=set(self.others),
            version=self.version,
            archive=dict(self.archive),
            next_observed=self.next_observed,
        )

    def mint_observed_id(self) -> str:
        while True:
            new_id = f"{Config.OBSERVED_ID_PREFIX}{self.next_observed:04d}"
            self.next_observed += 1
            if new_id not in self.objects and new_id not in self.archive:
                return new_id

    def summary(self, carrier_id: str) -> CarrierCandidateSummary:
        obj = self.objects[carrier_id]
        return CarrierCandidateSummary(carrier_id, tuple(obj.top_captions), obj.room_id or Config.FALLBACK_ROOM_ID)


def layer_counts(graph: CarrierRelationshipSceneGraph) -> Dict[str, int]:
    return {
        'carriers': len(graph.carriers),
        'carried': sum(len(v) for v in graph.carried.values()),
        'others': len(graph.others),
        'objects': len(graph.objects),
    }


def check_partition(graph: CarrierRelationshipSceneGraph) -> List[str]:
    """분할 불변식 위반 목록 (비어 있으면 정상)"""
    problems = []
    ids = set(graph.objects)
    seen: Dict[str, str] = {}
    for carrier_id, members in graph.carried.items():
        if carrier_id not in graph.carriers:
            problems.append(f"carried 키 '{carrier_id}'가 캐리어가 아님")
        for obj_id in members:
            if obj_id in seen:
                problems.append(f"'{obj_id}'가 두 캐리어('{seen[obj_id]}', '{carrier_id}')에 속함")
            seen[obj_id] = carrier_id
    layers = [graph.carriers, set(seen), graph.others]
    union = set().union(*layers)
    if union != ids:
        problems.append(f"분할 합집합 불일치: 누락={sorted(ids - union)}, 초과={sorted(union - ids)}")
    if sum(len(layer) for layer in layers) != len(ids):
        problems.append("레이어 간 중복 id 존재")
    for obj_id, obj in graph.objects.items():
        if not obj.room_id:
            problems.append(f"'{obj_id}'의 room_id 없음")
    return problems


def assign_rooms(objects: Sequence[SceneObject], rooms: Sequence[RoomPolygon]) -> Dict[str, str]:
    """중심 XY를 포함하는 방 (경계 공유 시 가장 작은 id), 없으면 hallway"""
    if not rooms:
        raise ValueError("정의된 방이 없음")
    ordered = sorted(rooms, key=lambda r: r.id)
    assignment = {}
    for obj in objects:
        center = obj.centroid.xy
        room = next((r for r in ordered if point_in_polygon(center, r)), None)
        assignment[obj.id] = room.id if room else Config.FALLBACK_ROOM_ID
    return assignment


def select_carrier_layer(
    objects: Sequence[SceneObject],
    params: ConstructionParams,
    providers: Providers,
) -> Set[str]:
    """유사도 -> 캡션 필터 -> 기하 조건의 3단계 캐리어 선택"""
    if not objects:
        return set()

    query_vec = providers.embedder.embed(tokenize(params.carrier_query_text))
    stage1 = [o for o in objects if cosine_similarity(o.text_feature, query_vec) > params.sigma]

    summaries = [
        CarrierCandidateSummary(o.id, tuple(o.top_captions), o.room_id or Config.FALLBACK_ROOM_ID)
        for o in stage1
    ]
    flagged = set(providers.ranker.filter_carrier_captions(summaries)) if summaries else set()
    stage2 = [o for o in stage1 if o.id in flagged]

    stage3 = {
        o.id for o in stage2
        if o.aabb.footprint_area >= params.min_footprint_area and o.aabb.min.z <= params.max_base_height
    }
    logger.debug(f"캐리어 선택: {len(objects)} -> {len(stage1)} -> {len(stage2)} -> {len(stage3)}")
    return stage3


def is_carried_by(carrier: SceneObject, obj: SceneObject, params: ConstructionParams) -> int:
    """h(carrier, obj): 발자국 크기, XY 겹침, 수직 간격, 중심 거리 조건"""
    if carrier.id == obj.id:
        raise ValueError("캐리어와 객체가 같음")
    c_box, o_box = carrier.aabb, obj.aabb
    if not o_box.footprint_area < c_box.footprint_area:
        return 0
    if aabb_overlap_ratio_xy(c_box, o_box) < params.xy_overlap_min:
        return 0
    gap = o_box.min.z - c_box.max.z
    if not (params.vertical_gap_lo <= gap <= params.vertical_gap_hi):
        return 0
    if obj.centroid.xy.distance_to(carrier.centroid.xy) > params.max_center_distance_factor * c_box.half_diagonal_xy:
        return 0
    return 1


def best_carrier(obj: SceneObject, carriers: Iterable[SceneObject], params: ConstructionParams) -> Optional[str]:
    """조건을 만족하는 캐리어 중 중심 XY 거리가 가장 가까운 것"""
    matches = [
        (obj.centroid.xy.distance_to(c.centroid.xy), c.id)
        for c in carriers
        if c.id != obj.id and is_carried_by(c, obj, params)
    ]
    return min(matches)[1] if matches else None


def assign_carried(
    objects: Sequence[SceneObject],
    carriers: Set[str],
    params: ConstructionParams,
) -> Tuple[Dict[str, Set[str]], Set[str]]:
    """(캐리어 -> 피캐리어 집합, others)"""
    by_id = {o.id: o for o in objects}
    missing = sorted(set(carriers) - set(by_id))
    if missing:
        raise ValueError(f"객체 목록에 없는 캐리어: {missing}")

    carrier_objs = [by_id[c] for c in sorted(carriers)]
    carried: Dict[str, Set[str]] = {c: set() for c in sorted(carriers)}
    others: Set[str] = set()
    for obj in objects:
        if obj.id in carriers:
            continue
        owner = best_carrier(obj, carrier_objs, params)
        if owner is None:
            others.add(obj.id)
        else:
            carried[owner].add(obj.id)
    return carried, others


def build_graph(
    objects: Sequence[SceneObject],
    rooms: Sequence[RoomPolygon],
    params: ConstructionParams,
    providers: Providers,
    building_id: str = "building",
) -> CarrierRelationshipSceneGraph:
    """assign_rooms -> select_carrier_layer -> assign_carried"""
    ids = [o.id for o in objects]
    if len(ids) != len(set(ids)):
        raise ConstructionError("input", ValueError("중복 객체 id"))

    if objects:
        try:
            rooms_by_obj = assign_rooms(objects, rooms)
        except ValueError as e:
            raise ConstructionError("assign_rooms", e) from e
        objects = [replace(o, room_id=rooms_by_obj[o.id]) for o in objects]

    try:
        carriers = select_carrier_layer(objects, params, providers)
    except (ValueError, ProviderError) as e:
        raise ConstructionError("select_carrier_layer", e) from e

    try:
        carried, others = assign_carried(objects, carriers, params)
    except ValueError as e:
        raise ConstructionError("assign_carried", e) from e

    graph = CarrierRelationshipSceneGraph(
        building_id=building_id,
        rooms=list(rooms),
        objects={o.id: o for o in objects},
        carriers=set(carriers),
        carried=carried,
        others=others,
        version=0,
    )
    counts = layer_counts(graph)
    logger.info(f"CRSG 구축: {counts['carriers']} carriers / {counts['carried']} carried / {counts['others']} others")
    return graph


def command_text(
    providers: Providers,
    text: Optional[str] = None,
    image: Optional[Swatch] = None,
    label_hint: Optional[str] = None,
) -> str:
    """명령을 텍스트로 정리 (이미지 전용이면 설명 생성, 요구형은 객체 문구로)"""
    if not text and image is None:
        raise ValueError("명령에 text 또는 image가 필요함")
    if not text:
        text = providers.vision.describe_image(image, label_hint)
    elif image is not None:
        text = f"{text} {providers.vision.describe_image(image, label_hint)}"
    return providers.ranker.interpret_demand(text)


def embed_command(providers: Providers, text: str) -> np.ndarray:
    tokens = tokenize(text)
    if not tokens:
        raise ValueError(f"명령에서 토큰을 얻지 못함: {text!r}")
    return providers.embedder.embed(tokens)


def rank_by_similarity(
    objects: Iterable[SceneObject],
    query_vec: np.ndarray,
    feature: str = "text",
) -> List[Tuple[str, float]]:
    """유사도 내림차순, 동률은 id 오름차순"""
    scored = []
    for obj in objects:
        vec = obj.text_feature if feature == "text" else obj.visual_feature
        scored.append((obj.id, cosine_similarity(vec, query_vec)))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


def resolve_command(
    graph: CarrierRelationshipSceneGraph,
    providers: Providers,
    text: Optional[str] = None,
    image: Optional[Swatch] = None,
    label_hint: Optional[str] = None,
) -> str:
    """명령 임베딩과 가장 유사한 객체 id"""
    if not graph.objects:
        raise ValueError("빈 그래프에서는 명령을 해석할 수 없음")
    query_vec = embed_command(providers, command_text(providers, text, image, label_hint))
    return rank_by_similarity(graph.objects.values(), query_vec)[0][0]


def _query_vector(providers: Providers, tokens: List[str], feature: str, dim: int) -> np.ndarray:
    if feature == "visual":
        return embed_text(tokens, dim, Config.EMBED_SEED + Config.VISUAL_SEED_OFFSET)
    return providers.embedder.embed(tokens)


def query(
    graph: CarrierRelationshipSceneGraph,
    text: str,
    top_k: int,
    providers: Providers,
    feature: str = "text",
) -> List[Tuple[str, float]]:
    """자유 문장 질의 ("<X> on the <Y>"는 Y 캐리어 위 객체로 한정)"""
    if top_k < 1:
        raise ValueError("top_k >= 1")
    if feature not in ("text", "visual"):
        raise ValueError(f"알 수 없는 feature: {feature}")
    if not graph.objects:
        return []

    text = providers.ranker.interpret_demand(text)
    dim = len(next(iter(graph.objects.values())).visual_feature)

    match = _ON_QUERY_RE.match(text)
    if match:
        x_tokens = tokenize(match.group('x'))
        y_tokens = set(tokenize(match.group('y')))
        if x_tokens and y_tokens:
            restricted = [
                graph.objects[obj_id]
                for carrier_id, members in graph.carried.items()
                if y_tokens <= set(graph.objects[carrier_id].tokens)
                for obj_id in members
            ]
            if restricted:
                vec = _query_vector(providers, x_tokens, feature, dim)
                return rank_by_similarity(restricted, vec, feature)[:top_k]
            logger.debug(f"'{match.group('y')}' 캐리어 위 객체 없음, 전체 검색")

    tokens = tokenize(text)
    if not tokens:
        raise ValueError(f"질의에서 토큰을 얻지 못함: {text!r}")
    vec = _query_vector(providers, tokens, feature, dim)
    return rank_by_similarity(graph.objects.values(), vec, feature)[:top_k]


