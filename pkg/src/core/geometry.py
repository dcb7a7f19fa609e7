# src/core/geometry.py
"""
기하 모듈
평면/입체 기본형, 점유 격자 경로 계획, 센서 시야(frustum) 판정
"""

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from shapely.geometry import Point, Polygon

SQRT2 = math.sqrt(2.0)

# 8-이웃 (dx, dy)
_NEIGHBOR_STEPS = [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)]

Cell = Tuple[int, int]


def _require_finite(*values: float):
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"유한하지 않은 좌표: {values}")


def normalize_angle(angle: float) -> float:
    """각도를 (-pi, pi] 범위로 정규화"""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        _require_finite(self.x, self.y)

    def distance_to(self, other: "Vec2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def as_list(self) -> List[float]:
        return [self.x, self.y]


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self):
        _require_finite(self.x, self.y, self.z)

    @property
    def xy(self) -> Vec2:
        return Vec2(self.x, self.y)

    def as_list(self) -> List[float]:
        return [self.x, self.y, self.z]


@dataclass(frozen=True)
class Aabb:
    min: Vec3
    max: Vec3

    def __post_init__(self):
        if self.min.x > self.max.x or self.min.y > self.max.y or self.min.z > self.max.z:
            raise ValueError(f"AABB min > max: {self.min} / {self.max}")

    @property
    def center(self) -> Vec3:
        return Vec3(
            (self.min.x + self.max.x) / 2.0,
            (self.min.y + self.max.y) / 2.0,
            (self.min.z + self.max.z) / 2.0,
        )

    @property
    def extent(self) -> Vec3:
        return Vec3(self.max.x - self.min.x, self.max.y - self.min.y, self.max.z - self.min.z)

    @property
    def footprint_area(self) -> float:
        return (self.max.x - self.min.x) * (self.max.y - self.min.y)

    @property
    def volume(self) -> float:
        ext = self.extent
        return ext.x * ext.y * ext.z

    @property
    def half_diagonal_xy(self) -> float:
        return 0.5 * math.hypot(self.max.x - self.min.x, self.max.y - self.min.y)

    @classmethod
    def around(cls, center: Vec3, half: float) -> "Aabb":
        """center 주변 한 변 2*half 정육면체"""
        return cls(
            Vec3(center.x - half, center.y - half, center.z - half),
            Vec3(center.x + half, center.y + half, center.z + half),
        )

    def translated(self, dx: float, dy: float, dz: float = 0.0) -> "Aabb":
        return Aabb(
            Vec3(self.min.x + dx, self.min.y + dy, self.min.z + dz),
            Vec3(self.max.x + dx, self.max.y + dy, self.max.z + dz),
        )

    def distance_xy(self, p: Vec2) -> float:
        """XY 발자국 사각형과 점 사이 거리 (내부면 0)"""
        dx = max(self.min.x - p.x, 0.0, p.x - self.max.x)
        dy = max(self.min.y - p.y, 0.0, p.y - self.max.y)
        return math.hypot(dx, dy)


@dataclass(frozen=True)
class Pose:
    position: Vec2
    yaw: float = 0.0

    def __post_init__(self):
        _require_finite(self.yaw)
        object.__setattr__(self, 'yaw', normalize_angle(self.yaw))


@dataclass(frozen=True)
class RoomPolygon:
    id: str
    vertices: Tuple[Vec2, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, 'vertices', tuple(self.vertices))
        if len(self.vertices) < 3:
            raise ValueError(f"방 '{self.id}' 다각형 꼭짓점 3개 미만")
        if not self.shape.is_valid:
            raise ValueError(f"방 '{self.id}' 다각형이 단순 다각형이 아님")

    @cached_property
    def shape(self) -> Polygon:
        return Polygon([(v.x, v.y) for v in self.vertices])


@dataclass(frozen=True)
class SensorSpec:
    range: float
    fov: float
    observe_radius_r: float
    dropout: float = 0.0
    sense_every: int = 1

    def __post_init__(self):
        if not (self.range > self.observe_radius_r > 0):
            raise ValueError("range > observe_radius_r > 0 이어야 함")
        if not (0 < self.fov <= 2.0 * math.pi + 1e-12):
            raise ValueError("0 < fov <= 2pi 이어야 함")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout은 [0, 1) 범위")
        if self.sense_every < 1:
            raise ValueError("sense_every >= 1")


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """cells[iy, ix] == True 이면 점유"""

    resolution: float
    origin: Vec2
    cells: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution > 0 이어야 함")
        cells = np.asarray(self.cells, dtype=bool)
        if cells.ndim != 2:
            raise ValueError("cells는 2차원 배열")
        cells.setflags(write=False)
        object.__setattr__(self, 'cells', cells)

    @classmethod
    def empty(cls, width: int, height: int, resolution: float, origin: Vec2 = Vec2(0.0, 0.0)) -> "OccupancyGrid":
        return cls(resolution, origin, np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return int(self.cells.shape[1])

    @property
    def height(self) -> int:
        return int(self.cells.shape[0])

    def world_to_cell(self, p: Vec2) -> Cell:
        return (
            int(math.floor((p.x - self.origin.x) / self.resolution)),
            int(math.floor((p.y - self.origin.y) / self.resolution)),
        )

    def cell_center(self, cell: Cell) -> Vec2:
        ix, iy = cell
        return Vec2(
            self.origin.x + (ix + 0.5) * self.resolution,
            self.origin.y + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, cell: Cell) -> bool:
        ix, iy = cell
        return 0 <= ix < self.width and 0 <= iy < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and not bool(self.cells[cell[1], cell[0]])

    def box_cells(self, x0: float, y0: float, x1: float, y1: float) -> Iterator[Cell]:
        """사각형과 양의 면적으로 겹치는 셀"""
        eps = 1e-9
        ix0 = max(int(math.floor((x0 - self.origin.x) / self.resolution + eps)), 0)
        iy0 = max(int(math.floor((y0 - self.origin.y) / self.resolution + eps)), 0)
        ix1 = min(int(math.ceil((x1 - self.origin.x) / self.resolution - eps)) - 1, self.width - 1)
        iy1 = min(int(math.ceil((y1 - self.origin.y) / self.resolution - eps)) - 1, self.height - 1)
        for iy in range(iy0, iy1 + 1):
            for ix in range(ix0, ix1 + 1):
                yield (ix, iy)

    def with_boxes(self, boxes: Iterable[Tuple[float, float, float, float]]) -> "OccupancyGrid":
        """사각형 (x0, y0, x1, y1) 들을 점유로 표시한 새 격자"""
        cells = np.array(self.cells, dtype=bool)
        for x0, y0, x1, y1 in boxes:
            for ix, iy in self.box_cells(x0, y0, x1, y1):
                cells[iy, ix] = True
        return OccupancyGrid(self.resolution, self.origin, cells)


Path = List[Vec2]


def point_in_polygon(p: Vec2, poly: RoomPolygon) -> bool:
    """경계 포함 내부 판정"""
    return bool(poly.shape.covers(Point(p.x, p.y)))


def aabb_overlap_ratio_xy(carrier: Aabb, obj: Aabb) -> float:
    """XY 교집합 면적 / 객체 발자국 면적"""
    area = obj.footprint_area
    if area <= 0:
        raise ValueError("객체 발자국 면적이 0")
    ix = min(carrier.max.x, obj.max.x) - max(carrier.min.x, obj.min.x)
    iy = min(carrier.max.y, obj.max.y) - max(carrier.min.y, obj.min.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    return min(1.0, (ix * iy) / area)


def _octile(a: Cell, b: Cell, resolution: float) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return resolution * (max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy))


@lru_cache(maxsize=16)
def free_neighbors(grid: OccupancyGrid) -> Dict[Cell, Tuple[Tuple[Cell, float], ...]]:
    """빈 셀마다 이동 가능한 8-이웃과 비용 (격자당 한 번 계산)"""
    res = grid.resolution
    occupied = grid.cells.tolist()
    width, height = grid.width, grid.height

    def free(ix, iy):
        return 0 <= ix < width and 0 <= iy < height and not occupied[iy][ix]

    table = {}
    for iy in range(height):
        for ix in range(width):
            if occupied[iy][ix]:
                continue
            steps = []
            for dx, dy in _NEIGHBOR_STEPS:
                if not free(ix + dx, iy + dy):
                    continue
                if dx and dy:
                    # 대각 이동 시 모서리 통과 금지
                    if not (free(ix + dx, iy) and free(ix, iy + dy)):
                        continue
                    steps.append(((ix + dx, iy + dy), res * SQRT2))
                else:
                    steps.append(((ix + dx, iy + dy), res))
            table[(ix, iy)] = tuple(steps)
    return table


@dataclass(frozen=True, eq=False)
class DistanceField:
    """한 시작 셀에서 도달 가능한 모든 셀까지의 최단 거리 (Dijkstra)"""

    start: Cell
    dist: Dict[Cell, float] = field(repr=False)
    parent: Dict[Cell, Optional[Cell]] = field(repr=False)

    def path_to(self, grid: OccupancyGrid, cell: Cell) -> Optional["Path"]:
        if cell not in self.parent:
            return None
        return _reconstruct(grid, self.parent, cell)


@lru_cache(maxsize=32)
def distance_field(grid: OccupancyGrid, start_cell: Cell) -> DistanceField:
    """start_cell 기준 Dijkstra 거리장 (시작 셀이 점유면 빈 거리장)"""
    if not grid.is_free(start_cell):
        return DistanceField(start_cell, {}, {})
    neighbors = free_neighbors(grid)
    dist = {start_cell: 0.0}
    parent: Dict[Cell, Optional[Cell]] = {start_cell: None}
    frontier = [(0.0, start_cell)]
    done = set()
    while frontier:
        d, current = heapq.heappop(frontier)
        if current in done:
            continue
        done.add(current)
        for nxt, step in neighbors[current]:
            nd = d + step
            if nd < dist.get(nxt, math.inf) - 1e-12:
                dist[nxt] = nd
                parent[nxt] = current
                heapq.heappush(frontier, (nd, nxt))
    return DistanceField(start_cell, dist, parent)


def plan_path(grid: OccupancyGrid, start: Vec2, goal: Vec2) -> Optional[Path]:
    """8-연결 A* (octile 휴리스틱), 경로 없으면 None"""
    start_cell = grid.world_to_cell(start)
    goal_cell = grid.world_to_cell(goal)
    if not grid.in_bounds(start_cell) or not grid.in_bounds(goal_cell):
        raise ValueError(f"격자 밖 좌표: start={start}, goal={goal}")
    if not grid.is_free(start_cell):
        raise ValueError(f"시작점이 점유 셀: {start}")
    if not grid.is_free(goal_cell):
        return None
    if start_cell == goal_cell:
        return [grid.cell_center(start_cell)]

    res = grid.resolution
    neighbors = free_neighbors(grid)
    counter = 0
    frontier = [(_octile(start_cell, goal_cell, res), counter, start_cell)]
    came_from = {start_cell: None}
    cost_so_far = {start_cell: 0.0}
    closed = set()

    while frontier:
        _, _, current = heapq.heappop(frontier)
        if current in closed:
            continue
        if current == goal_cell:
            return _reconstruct(grid, came_from, goal_cell)
        closed.add(current)

        for nxt, step in neighbors[current]:
            new_cost = cost_so_far[current] + step
            if nxt not in cost_so_far or new_cost < cost_so_far[nxt] - 1e-12:
                cost_so_far[nxt] = new_cost
                came_from[nxt] = current
                counter += 1
                heapq.heappush(frontier, (new_cost + _octile(nxt, goal_cell, res), counter, nxt))

    return None


def _reconstruct(grid: OccupancyGrid, came_from, goal: Cell) -> Path:
    cells = [goal]
    while came_from[cells[-1]] is not None:
        cells.append(came_from[cells[-1]])
    cells.reverse()
    return [grid.cell_center(c) for c in cells]


def path_length(path: Sequence[Vec2]) -> float:
    """연속 구간 유클리드 길이의 합"""
    return sum(a.distance_to(b) for a, b in zip(path, path[1:]))


def _bresenham_line(c0: Cell, c1: Cell) -> Iterator[Cell]:
    x0, y0 = c0
    x1, y1 = c1
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield (x0, y0)
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def line_of_sight(grid: OccupancyGrid, a: Vec2, b: Vec2) -> bool:
    """광선이 지나는 셀 중 양 끝 셀을 뺀 나머지에 점유 셀이 없으면 True

    끝 셀 자체는 검사하지 않음 (벽에 붙은 물체 표면, 점유 셀 안의 관측자도 보임)
    """
    return cells_visible(grid, grid.world_to_cell(a), grid.world_to_cell(b))


@lru_cache(maxsize=1 << 18)
def cells_visible(grid: OccupancyGrid, c0: Cell, c1: Cell) -> bool:
    """셀 단위 가시선 (결과는 격자, 셀 쌍별로 캐시)"""
    for cell in _bresenham_line(c0, c1):
        if cell == c0 or cell == c1:
            continue
        if not grid.in_bounds(cell) or grid.cells[cell[1], cell[0]]:
            return False
    return True


def in_frustum(pose: Pose, sensor: SensorSpec, point: Vec2, grid: Optional[OccupancyGrid] = None) -> bool:
    """거리, 시야각, 가시선 조건을 모두 만족하면 True"""
    dist = pose.position.distance_to(point)
    if dist == 0.0:
        return True
    if dist > sensor.range:
        return False
    bearing = normalize_angle(math.atan2(point.y - pose.position.y, point.x - pose.position.x) - pose.yaw)
    if abs(bearing) > sensor.fov / 2.0 + 1e-12:
        return False
    if grid is not None:
        return line_of_sight(grid, pose.position, point)
    return True
