import math

import numpy as np
import pytest

from core.geometry import (
    Aabb,
    OccupancyGrid,
    Pose,
    RoomPolygon,
    SensorSpec,
    Vec2,
    Vec3,
    aabb_overlap_ratio_xy,
    distance_field,
    in_frustum,
    line_of_sight,
    normalize_angle,
    path_length,
    plan_path,
    point_in_polygon,
)


def _corridor_grid():
    # 10x10, x=1.0 에 y 0.0-1.6 벽 (위쪽 0.4 m 통로)
    grid = OccupancyGrid.empty(10, 10, 0.2)
    return grid.with_boxes([(1.0, 0.0, 1.2, 1.6)])


@pytest.mark.parametrize("angle, expected", [
    (0.0, 0.0),
    (math.pi, math.pi),
    (-math.pi, math.pi),
    (2.5 * math.pi, math.pi / 2),
    (-math.pi / 2, -math.pi / 2),
])
def test_normalize_angle(angle, expected):
    assert normalize_angle(angle) == pytest.approx(expected)


def test_aabb_properties():
    box = Aabb(Vec3(0.0, 0.0, 0.0), Vec3(2.0, 1.0, 0.5))
    assert box.center == Vec3(1.0, 0.5, 0.25)
    assert box.footprint_area == pytest.approx(2.0)
    assert box.volume == pytest.approx(1.0)
    assert box.distance_xy(Vec2(1.0, 0.5)) == 0.0
    assert box.distance_xy(Vec2(3.0, 0.5)) == pytest.approx(1.0)


def test_aabb_rejects_inverted_box():
    with pytest.raises(ValueError):
        Aabb(Vec3(1.0, 0.0, 0.0), Vec3(0.0, 1.0, 1.0))


def test_aabb_around_is_centered_cube():
    box = Aabb.around(Vec3(1.0, 2.0, 0.5), 0.05)
    assert box.center.x == pytest.approx(1.0)
    assert box.center.y == pytest.approx(2.0)
    assert box.extent.x == pytest.approx(0.1)


def test_overlap_ratio_xy():
    carrier = Aabb(Vec3(0.0, 0.0, 0.0), Vec3(1.0, 1.0, 0.5))
    inside = Aabb(Vec3(0.2, 0.2, 0.5), Vec3(0.4, 0.4, 0.6))
    half_out = Aabb(Vec3(0.9, 0.0, 0.5), Vec3(1.1, 0.2, 0.6))
    away = Aabb(Vec3(2.0, 2.0, 0.5), Vec3(2.2, 2.2, 0.6))
    assert aabb_overlap_ratio_xy(carrier, inside) == pytest.approx(1.0)
    assert aabb_overlap_ratio_xy(carrier, half_out) == pytest.approx(0.5)
    assert aabb_overlap_ratio_xy(carrier, away) == 0.0


def test_point_in_polygon_includes_boundary():
    room = RoomPolygon("r", (Vec2(0, 0), Vec2(4, 0), Vec2(4, 4), Vec2(0, 4)))
    assert point_in_polygon(Vec2(2, 2), room)
    assert point_in_polygon(Vec2(4, 2), room)
    assert not point_in_polygon(Vec2(5, 2), room)


def test_room_needs_three_vertices():
    with pytest.raises(ValueError):
        RoomPolygon("r", (Vec2(0, 0), Vec2(1, 0)))


def test_world_to_cell_and_back():
    grid = OccupancyGrid.empty(10, 10, 0.2)
    cell = grid.world_to_cell(Vec2(0.5, 0.3))
    assert cell == (2, 1)
    center = grid.cell_center(cell)
    assert (center.x, center.y) == (pytest.approx(0.5), pytest.approx(0.3))


def test_plan_path_straight_line():
    grid = OccupancyGrid.empty(10, 10, 0.2)
    path = plan_path(grid, Vec2(0.1, 0.1), Vec2(1.1, 0.1))
    assert path[0] == grid.cell_center((0, 0))
    assert path[-1] == grid.cell_center((5, 0))
    assert path_length(path) == pytest.approx(1.0)


def test_plan_path_goes_around_wall():
    grid = _corridor_grid()
    path = plan_path(grid, Vec2(0.5, 0.5), Vec2(1.7, 0.5))
    assert path is not None
    assert all(grid.is_free(grid.world_to_cell(p)) for p in path)
    assert path_length(path) > 1.2
    assert max(p.y for p in path) > 1.6


def test_plan_path_unreachable_goal():
    grid = OccupancyGrid.empty(10, 10, 0.2).with_boxes([(1.0, 0.0, 1.2, 2.0)])
    assert plan_path(grid, Vec2(0.5, 0.5), Vec2(1.7, 0.5)) is None


def test_plan_path_occupied_goal_is_none():
    grid = _corridor_grid()
    assert plan_path(grid, Vec2(0.5, 0.5), Vec2(1.1, 0.5)) is None


def test_plan_path_rejects_blocked_start():
    grid = _corridor_grid()
    with pytest.raises(ValueError):
        plan_path(grid, Vec2(1.1, 0.5), Vec2(0.5, 0.5))


def test_plan_path_no_corner_cutting():
    cells = np.zeros((3, 3), dtype=bool)
    cells[0, 1] = True
    cells[1, 0] = True
    grid = OccupancyGrid(1.0, Vec2(0.0, 0.0), cells)
    # (0,0) -> (1,1) 대각 이동은 모서리를 지나므로 불가, 다른 길도 없음
    assert plan_path(grid, Vec2(0.5, 0.5), Vec2(1.5, 1.5)) is None


def test_line_of_sight_blocked_by_wall():
    grid = _corridor_grid()
    assert not line_of_sight(grid, Vec2(0.5, 0.5), Vec2(1.7, 0.5))
    assert line_of_sight(grid, Vec2(0.5, 1.9), Vec2(1.7, 1.9))


def test_line_of_sight_ignores_endpoint_cells():
    cells = np.zeros((1, 5), dtype=bool)
    cells[0, 0] = True
    cells[0, 4] = True
    grid = OccupancyGrid(1.0, Vec2(0.0, 0.0), cells)
    assert line_of_sight(grid, Vec2(0.5, 0.5), Vec2(4.5, 0.5))
    assert line_of_sight(grid, Vec2(4.5, 0.5), Vec2(0.5, 0.5))
    blocked = OccupancyGrid(1.0, Vec2(0.0, 0.0), np.array([[False, False, True, False, False]]))
    assert not line_of_sight(blocked, Vec2(0.5, 0.5), Vec2(4.5, 0.5))
    assert line_of_sight(blocked, Vec2(0.5, 0.5), Vec2(2.5, 0.5))


def test_in_frustum_range_and_fov():
    sensor = SensorSpec(range=3.0, fov=math.pi / 2, observe_radius_r=2.0)
    pose = Pose(Vec2(0.0, 0.0), 0.0)
    assert in_frustum(pose, sensor, Vec2(1.0, 0.0))
    assert in_frustum(pose, sensor, Vec2(1.0, 0.9))
    assert not in_frustum(pose, sensor, Vec2(1.0, 1.1))
    assert not in_frustum(pose, sensor, Vec2(-1.0, 0.0))
    assert not in_frustum(pose, sensor, Vec2(3.5, 0.0))


def test_sensor_spec_validation():
    with pytest.raises(ValueError):
        SensorSpec(range=1.0, fov=1.0, observe_radius_r=2.0)
    with pytest.raises(ValueError):
        SensorSpec(range=3.0, fov=1.0, observe_radius_r=2.0, dropout=1.0)


def _random_grid(rng, width, height, density):
    cells = rng.random((height, width)) < density
    return OccupancyGrid(0.5, Vec2(0.0, 0.0), cells)


def _relaxed_distances(grid, start):
    """격자 전체를 반복 완화해 구한 8-연결 거리 (모서리 통과 금지)"""
    h, w = grid.cells.shape
    free = np.pad(~grid.cells, 1)
    dist = np.full((h, w), np.inf)
    dist[start[1], start[0]] = 0.0
    while True:
        padded = np.pad(dist, 1, constant_values=np.inf)
        relaxed = dist.copy()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if (dx, dy) == (0, 0):
                    continue
                source = padded[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
                ok = free[1:1 + h, 1:1 + w].copy()
                if dx and dy:
                    ok &= free[1 - dy:1 - dy + h, 1:1 + w] & free[1:1 + h, 1 - dx:1 - dx + w]
                step = grid.resolution * math.hypot(dx, dy)
                relaxed = np.minimum(relaxed, np.where(ok, source + step, np.inf))
        if not (relaxed < dist - 1e-12).any():
            return dist
        dist = relaxed


def _free_cells(grid):
    return [(int(ix), int(iy)) for iy, ix in zip(*np.nonzero(~grid.cells))]


def test_plan_path_is_shortest_on_random_grids():
    rng = np.random.default_rng(7)
    for _ in range(25):
        grid = _random_grid(rng, int(rng.integers(4, 17)), int(rng.integers(4, 17)), 0.25)
        free = _free_cells(grid)
        if len(free) < 2:
            continue
        start = free[int(rng.integers(len(free)))]
        oracle = _relaxed_distances(grid, start)
        for _ in range(6):
            goal = free[int(rng.integers(len(free)))]
            path = plan_path(grid, grid.cell_center(start), grid.cell_center(goal))
            expected = oracle[goal[1], goal[0]]
            if not np.isfinite(expected):
                assert path is None
                continue
            assert path is not None
            assert path_length(path) == pytest.approx(expected, abs=1e-9)
            assert all(grid.is_free(grid.world_to_cell(p)) for p in path)


def test_distance_field_matches_relaxation():
    rng = np.random.default_rng(11)
    for _ in range(15):
        grid = _random_grid(rng, int(rng.integers(4, 17)), int(rng.integers(4, 17)), 0.3)
        free = _free_cells(grid)
        if not free:
            continue
        start = free[int(rng.integers(len(free)))]
        oracle = _relaxed_distances(grid, start)
        dist_field = distance_field(grid, start)
        reachable = {c for c in free if np.isfinite(oracle[c[1], c[0]])}
        assert set(dist_field.dist) == reachable
        for cell in reachable:
            assert dist_field.dist[cell] == pytest.approx(oracle[cell[1], cell[0]], abs=1e-9)
            assert path_length(dist_field.path_to(grid, cell)) == pytest.approx(dist_field.dist[cell], abs=1e-9)


def test_distance_field_from_occupied_cell_is_empty():
    grid = _corridor_grid()
    assert distance_field(grid, grid.world_to_cell(Vec2(1.1, 0.5))).dist == {}


def test_path_length_is_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(20):
        grid = _random_grid(rng, 12, 12, 0.2)
        free = _free_cells(grid)
        if len(free) < 2:
            continue
        a, b = (free[int(i)] for i in rng.choice(len(free), size=2, replace=False))
        forward = plan_path(grid, grid.cell_center(a), grid.cell_center(b))
        backward = plan_path(grid, grid.cell_center(b), grid.cell_center(a))
        assert (forward is None) == (backward is None)
        if forward is not None:
            assert path_length(forward) == pytest.approx(path_length(backward), abs=1e-9)


def _star_polygon(rng, n):
    step = 2.0 * math.pi / n
    angles = [k * step + rng.uniform(0.0, 0.8 * step) for k in range(n)]
    radii = rng.uniform(0.5, 3.0, size=n)
    return [Vec2(5.0 + r * math.cos(a), 5.0 + r * math.sin(a)) for a, r in zip(angles, radii)]


def _winding_number(p, vertices):
    wn = 0
    for a, b in zip(vertices, vertices[1:] + vertices[:1]):
        cross = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)
        if a.y <= p.y < b.y and cross > 0:
            wn += 1
        elif b.y <= p.y < a.y and cross < 0:
            wn -= 1
    return wn


def _segment_distance(p, a, b):
    ab = np.array([b.x - a.x, b.y - a.y])
    ap = np.array([p.x - a.x, p.y - a.y])
    t = float(np.clip(ap @ ab / (ab @ ab), 0.0, 1.0))
    return float(np.linalg.norm(ap - t * ab))


def test_point_in_polygon_matches_winding_number():
    rng = np.random.default_rng(5)
    for k in range(30):
        vertices = _star_polygon(rng, int(rng.integers(5, 12)))
        poly = RoomPolygon(f"room{k}", vertices)
        for _ in range(40):
            p = Vec2(*rng.uniform(1.5, 8.5, size=2))
            if min(_segment_distance(p, a, b) for a, b in zip(vertices, vertices[1:] + vertices[:1])) < 1e-3:
                continue
            assert point_in_polygon(p, poly) == (_winding_number(p, vertices) != 0)
