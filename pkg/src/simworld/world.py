# src/simworld/world.py
"""
시뮬레이션 월드 모듈
장면 로드, 객체 이동 이벤트, 센서 관측, 접근 지점 계산
"""

import copy
import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from config.config import Config
from core.adaptation import ObservedObject
from core.exceptions import SceneFormatError
from core.features import Swatch
from core.geometry import (
    Aabb,
    Cell,
    OccupancyGrid,
    Path as WaypointPath,
    Pose,
    RoomPolygon,
    SensorSpec,
    Vec2,
    Vec3,
    distance_field,
    in_frustum,
    line_of_sight,
    plan_path,
)
from core.scene_graph import ConstructionParams, SceneObject, is_carried_by, make_scene_object
from providers.base import AffinityTable, TextEmbedder
from providers.mock_providers import HashTextEmbedder
from simworld.scene_schema import SceneDoc, SwatchSpec, parse_scene
from utils.utils import apply_overrides, sha256_of

logger = logging.getLogger(__name__)

# 목표 객체 발자국에서 접근 지점까지 최대 거리 (m)
APPROACH_RADIUS = 1.5


@dataclass(frozen=True)
class DisplacementEvent:
    object_id: str
    new_carrier_id: str
    before_task: int
    at: Optional[Vec2] = None


@dataclass(frozen=True, eq=False)
class NavTask:
    target_id: str
    text: Optional[str] = None
    image: Optional[Swatch] = field(default=None, repr=False)
    hint: Optional[str] = None


@dataclass(eq=False)
class WorldModel:
    """정답 월드: 벽 격자, 주행 격자, 방, 객체와 현재 캐리어, 센서"""

    walls: OccupancyGrid
    nav_grid: OccupancyGrid
    rooms: List[RoomPolygon]
    objects: Dict[str, SceneObject]
    carrier_of: Dict[str, Optional[str]]
    sensor: SensorSpec
    seed: int = 0
    rng: np.random.Generator = field(default=None, repr=False)
    applied: Set[Tuple[int, int]] = field(default_factory=set)

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.seed)

    def copy(self) -> "WorldModel":
        return WorldModel(
            walls=self.walls,
            nav_grid=self.nav_grid,
            rooms=list(self.rooms),
            objects=dict(self.objects),
            carrier_of=dict(self.carrier_of),
            sensor=self.sensor,
            seed=self.seed,
            rng=copy.deepcopy(self.rng),
            applied=set(self.applied),
        )


@dataclass(eq=False)
class SceneInputs:
    """오프라인 CRSG 구축 및 실험에 필요한 장면 입력"""

    name: str
    building_id: str
    objects: List[SceneObject]
    rooms: List[RoomPolygon]
    affinity: AffinityTable
    start: Pose
    displacements: List[DisplacementEvent]
    tasks: List[NavTask]
    queries: list
    params: Dict[str, dict]
    seed: int


def swatch_from_spec(spec: SwatchSpec) -> Swatch:
    if spec.color is not None:
        return Swatch.solid(tuple(spec.color), spec.width, spec.height)
    return Swatch(np.asarray(spec.pixels, dtype=np.uint8))


def sensor_from_overrides(overrides: Optional[dict] = None) -> SensorSpec:
    return apply_overrides(SensorSpec(**Config.DEFAULT_SENSOR), overrides)


def landing_aabb(obj: SceneObject, carrier: SceneObject, at: Optional[Vec2] = None) -> Aabb:
    """캐리어 윗면에 (at 또는 캐리어 중심에) 놓인 새 AABB"""
    target = at or carrier.centroid.xy
    center = obj.centroid
    dz = carrier.aabb.max.z - obj.aabb.min.z
    return obj.aabb.translated(target.x - center.x, target.y - center.y, dz)


def _build_nav_grid(walls: OccupancyGrid, objects: Sequence[SceneObject]) -> OccupancyGrid:
    boxes = [
        (o.aabb.min.x, o.aabb.min.y, o.aabb.max.x, o.aabb.max.y)
        for o in objects
        if o.aabb.min.z <= Config.FLOOR_CONTACT_HEIGHT
    ]
    return walls.with_boxes(boxes)


def world_from_document(
    doc: SceneDoc,
    embedder: Optional[TextEmbedder] = None,
    seed: Optional[int] = None,
) -> Tuple[WorldModel, SceneInputs]:
    """검증된 장면 문서로 월드와 장면 입력 생성"""
    embedder = embedder or HashTextEmbedder()
    grid = doc.grid
    origin = Vec2(*grid.origin)
    walls = OccupancyGrid.empty(grid.width, grid.height, grid.resolution, origin)
    walls = walls.with_boxes(tuple(w) for w in grid.walls)

    try:
        rooms = [RoomPolygon(r.id, tuple(Vec2(*v) for v in r.vertices), r.name) for r in doc.rooms]
    except ValueError as e:
        raise SceneFormatError("rooms", str(e)) from e

    objects = []
    for i, spec in enumerate(doc.objects):
        try:
            objects.append(make_scene_object(
                spec.id,
                Aabb(Vec3(*spec.aabb.min), Vec3(*spec.aabb.max)),
                spec.captions,
                swatch_from_spec(spec.swatch),
                embedder,
            ))
        except ValueError as e:
            raise SceneFormatError(f"objects.{i}", str(e)) from e
    by_id = {o.id: o for o in objects}

    try:
        construction = ConstructionParams.from_overrides(doc.params.construction)
        sensor = sensor_from_overrides(doc.params.sensor)
    except (TypeError, ValueError) as e:
        raise SceneFormatError("params", str(e)) from e

    for i, spec in enumerate(doc.objects):
        if spec.carrier is not None and not is_carried_by(by_id[spec.carrier], by_id[spec.id], construction):
            raise SceneFormatError(f"objects.{i}.carrier", f"'{spec.id}'가 '{spec.carrier}' 위에 놓여 있지 않음")

    nav_grid = _build_nav_grid(walls, objects)
    start = Pose(Vec2(doc.start.x, doc.start.y), doc.start.yaw)
    if not nav_grid.is_free(nav_grid.world_to_cell(start.position)):
        raise SceneFormatError("start", "시작 위치가 점유 셀이거나 격자 밖")

    events = [
        DisplacementEvent(e.object, e.carrier, e.before_task, Vec2(*e.at) if e.at else None)
        for e in doc.displacements
    ]
    _check_landings(by_id, {s.id: s.carrier for s in doc.objects}, events, construction)

    tasks = []
    for task in doc.tasks:
        image = None
        if task.image_of is not None:
            image = by_id[task.image_of].appearance
        elif task.image is not None:
            image = swatch_from_spec(task.image)
        tasks.append(NavTask(task.target, task.text, image, task.hint))

    world = WorldModel(
        walls=walls,
        nav_grid=nav_grid,
        rooms=rooms,
        objects=dict(by_id),
        carrier_of={s.id: s.carrier for s in doc.objects},
        sensor=sensor,
        seed=doc.seed if seed is None else seed,
    )
    inputs = SceneInputs(
        name=doc.name,
        building_id=doc.building_id,
        objects=objects,
        rooms=rooms,
        affinity=AffinityTable.from_nested(doc.affinity_table.model_dump()),
        start=start,
        displacements=events,
        tasks=tasks,
        queries=[q.model_dump() for q in doc.queries],
        params=doc.params.model_dump(),
        seed=world.seed,
    )
    return world, inputs


def _check_landings(by_id, carrier_of, events, construction):
    """이동 이벤트를 순서대로 시뮬레이션하며 착지 조건 검사 (로드 시점)"""
    objects = dict(by_id)
    for i, event in sorted(enumerate(events), key=lambda item: (item[1].before_task, item[0])):
        carrier = objects[event.new_carrier_id]
        obj = objects[event.object_id]
        if event.object_id == event.new_carrier_id:
            raise SceneFormatError(f"displacements.{i}", "객체를 자기 자신 위로 옮길 수 없음")
        moved = replace(obj, aabb=landing_aabb(obj, carrier, event.at))
        if not is_carried_by(carrier, moved, construction):
            raise SceneFormatError(f"displacements.{i}", f"'{event.object_id}' 착지 위치가 '{event.new_carrier_id}' 위가 아님")
        objects[event.object_id] = moved


def load_scene(
    path: Union[str, Path],
    embedder: Optional[TextEmbedder] = None,
    seed: Optional[int] = None,
) -> Tuple[WorldModel, SceneInputs]:
    text = Path(path).read_text(encoding='utf-8')
    world, inputs = world_from_document(parse_scene(text), embedder, seed)
    logger.info(f"장면 로드: {inputs.name} ({len(inputs.objects)} objects, {len(inputs.rooms)} rooms)")
    return world, inputs


def apply_displacements(world: WorldModel, events: Sequence[DisplacementEvent], task_index: int):
    """task_index 직전에 예정된 이동을 순서대로 적용 (재적용 없음)"""
    for i, event in enumerate(events):
        if event.before_task != task_index or (i, task_index) in world.applied:
            continue
        obj = world.objects[event.object_id]
        carrier = world.objects[event.new_carrier_id]
        world.objects[event.object_id] = replace(obj, aabb=landing_aabb(obj, carrier, event.at))
        world.carrier_of[event.object_id] = event.new_carrier_id
        world.applied.add((i, task_index))
        logger.debug(f"이동 적용: {event.object_id} -> {event.new_carrier_id} (task {task_index})")


def sense(world: WorldModel, pose: Pose) -> List[ObservedObject]:
    """시야 안 객체 관측 (id 순, dropout 설정 시 일부 누락)"""
    observations = []
    for obj_id in sorted(world.objects):
        obj = world.objects[obj_id]
        center = obj.centroid.xy
        if not in_frustum(pose, world.sensor, center, world.walls):
            continue
        if world.sensor.dropout > 0 and world.rng.random() < world.sensor.dropout:
            continue
        observations.append(ObservedObject(
            track_id=obj.id,
            aabb=obj.aabb,
            captions=obj.captions,
            text_feature=obj.text_feature,
            visual_feature=obj.visual_feature,
            appearance=obj.appearance,
            mean_depth=max(pose.position.distance_to(center), 1e-3),
        ))
    return observations


def reachable_cells(grid: OccupancyGrid, start: Vec2) -> Set[Cell]:
    """시작 셀에서 8-연결로 도달 가능한 빈 셀"""
    return set(distance_field(grid, grid.world_to_cell(start)).dist)


@lru_cache(maxsize=4096)
def _approach_cells(grid: OccupancyGrid, walls: OccupancyGrid, aabb: Aabb, max_dist: float) -> Tuple[Cell, ...]:
    """접근 후보 셀 (목표 중심까지 거리, y, x 순, 벽 가시선 있는 빈 셀만)"""
    target = aabb.center.xy
    keyed = []
    for cell in grid.box_cells(
        aabb.min.x - max_dist, aabb.min.y - max_dist, aabb.max.x + max_dist, aabb.max.y + max_dist
    ):
        if not grid.is_free(cell):
            continue
        p = grid.cell_center(cell)
        if aabb.distance_xy(p) > max_dist:
            continue
        keyed.append(((p.distance_to(target), cell[1], cell[0]), cell))
    keyed.sort()
    return tuple(cell for _, cell in keyed if line_of_sight(walls, grid.cell_center(cell), target))


def _approach_cell(world: WorldModel, aabb: Aabb, start: Vec2, max_dist: float):
    grid = world.nav_grid
    dist_field = distance_field(grid, grid.world_to_cell(start))
    for cell in _approach_cells(grid, world.walls, aabb, max_dist):
        if cell in dist_field.dist:
            return cell, dist_field
    return None, dist_field


def approach_point(
    world: WorldModel,
    aabb: Aabb,
    start: Vec2,
    max_dist: float = APPROACH_RADIUS,
) -> Optional[Tuple[Vec2, WaypointPath]]:
    """객체 중심에 가장 가까운 도달 가능 빈 셀 (벽 가시선 필요)과 A* 경로"""
    cell, _ = _approach_cell(world, aabb, start, max_dist)
    if cell is None:
        return None
    point = world.nav_grid.cell_center(cell)
    path = plan_path(world.nav_grid, start, point)
    if path is None:
        return None
    return point, path


def approach_distance(world: WorldModel, aabb: Aabb, start: Vec2, max_dist: float = APPROACH_RADIUS) -> Optional[float]:
    """approach_point 경로 길이와 같은 값 (경로 생성 없이 거리장에서 읽음)"""
    cell, dist_field = _approach_cell(world, aabb, start, max_dist)
    return None if cell is None else dist_field.dist[cell]


def world_hash(world: WorldModel) -> str:
    """월드 정준 JSON의 SHA-256"""
    data = {
        'walls': {
            'resolution': world.walls.resolution,
            'origin': world.walls.origin.as_list(),
            'cells': np.packbits(world.walls.cells).tobytes().hex(),
            'shape': list(world.walls.cells.shape),
        },
        'rooms': [[r.id, [v.as_list() for v in r.vertices]] for r in sorted(world.rooms, key=lambda r: r.id)],
        'objects': [
            {
                'id': o.id,
                'aabb': [o.aabb.min.as_list(), o.aabb.max.as_list()],
                'captions': o.captions,
                'carrier': world.carrier_of.get(o.id),
                'swatch': o.appearance.to_bytes().hex(),
                'text_feature': [round(float(v), 12) for v in o.text_feature],
            }
            for o in (world.objects[k] for k in sorted(world.objects))
        ],
        'sensor': [world.sensor.range, world.sensor.fov, world.sensor.observe_radius_r,
                   world.sensor.dropout, world.sensor.sense_every],
        'seed': world.seed,
    }
    return sha256_of(data)


def facing(position: Vec2, target: Vec2, default_yaw: float = 0.0) -> Pose:
    """position에서 target을 바라보는 자세"""
    dx, dy = target.x - position.x, target.y - position.y
    if dx == 0 and dy == 0:
        return Pose(position, default_yaw)
    return Pose(position, math.atan2(dy, dx))
