import json
import math

import pytest

from core.exceptions import SceneFormatError
from core.geometry import Pose, Vec2, path_length
from simworld.scene_schema import parse_scene
from simworld.world import (
    apply_displacements,
    approach_distance,
    approach_point,
    facing,
    load_scene,
    reachable_cells,
    sense,
    world_from_document,
    world_hash,
)


@pytest.fixture
def loaded(demo_path):
    return load_scene(demo_path)


def _load_modified(demo_text, mutate):
    doc = json.loads(demo_text)
    mutate(doc)
    return world_from_document(parse_scene(json.dumps(doc)))


def test_load_demo_scene(loaded):
    world, inputs = loaded
    assert inputs.name == "demo"
    assert len(inputs.objects) == 12
    assert len(inputs.rooms) == 3
    assert len(inputs.tasks) == 5
    assert len(inputs.displacements) == 1
    assert world.seed == 7
    assert world.carrier_of["cup_black"] == "table_living"
    assert world.carrier_of["sofa_living"] is None
    assert inputs.tasks[2].image is not None
    assert inputs.tasks[2].hint == "red book"


def test_floor_objects_block_navigation_only(loaded):
    world, _ = loaded
    sofa_cell = world.nav_grid.world_to_cell(Vec2(1.4, 0.8))
    assert not world.nav_grid.is_free(sofa_cell)
    assert world.walls.is_free(sofa_cell)
    # 벽 위 선반은 바닥에 닿지 않음
    shelf_cell = world.nav_grid.world_to_cell(Vec2(0.7, 3.6))
    assert world.nav_grid.is_free(shelf_cell)


def test_sense_sees_objects_ahead(loaded):
    world, inputs = loaded
    seen = sense(world, inputs.start)
    ids = [o.track_id for o in seen]
    assert ids == sorted(ids)
    assert {"table_living", "cup_black", "book_red"} <= set(ids)
    assert all(o.mean_depth > 0 for o in seen)


def test_sense_nothing_behind(loaded):
    world, inputs = loaded
    assert sense(world, Pose(inputs.start.position, math.pi)) == []


def test_displacement_applied_once(loaded):
    world, inputs = loaded
    apply_displacements(world, inputs.displacements, 1)
    assert world.carrier_of["cup_black"] == "table_living"
    apply_displacements(world, inputs.displacements, 2)
    moved = world.objects["cup_black"].aabb
    assert world.carrier_of["cup_black"] == "nightstand_bedroom"
    assert moved.center.x == pytest.approx(9.5)
    assert moved.center.y == pytest.approx(3.3)
    assert moved.min.z == pytest.approx(0.55)
    apply_displacements(world, inputs.displacements, 2)
    assert world.objects["cup_black"].aabb == moved


def test_world_copy_is_independent(loaded):
    world, inputs = loaded
    copy = world.copy()
    apply_displacements(copy, inputs.displacements, 2)
    assert world.carrier_of["cup_black"] == "table_living"
    assert world_hash(world) != world_hash(copy)


def test_world_hash_is_stable(demo_path):
    first, _ = load_scene(demo_path)
    second, _ = load_scene(demo_path)
    assert world_hash(first) == world_hash(second)


def test_reachable_cells(loaded):
    world, inputs = loaded
    cells = reachable_cells(world.nav_grid, inputs.start.position)
    # 문으로 세 방이 모두 이어져 있음
    assert world.nav_grid.world_to_cell(Vec2(10.0, 2.0)) in cells
    assert reachable_cells(world.nav_grid, Vec2(0.05, 2.0)) == set()


def test_approach_point_for_carrier(loaded):
    world, inputs = loaded
    table = world.objects["table_living"].aabb
    point, path = approach_point(world, table, inputs.start.position)
    assert table.distance_xy(point) <= 1.5
    assert world.nav_grid.is_free(world.nav_grid.world_to_cell(point))
    assert path[-1] == point
    assert path[0] == world.nav_grid.cell_center(world.nav_grid.world_to_cell(inputs.start.position))


def test_approach_point_across_rooms(loaded):
    world, inputs = loaded
    nightstand = world.objects["nightstand_bedroom"].aabb
    point, path = approach_point(world, nightstand, inputs.start.position)
    assert point.x > 8.0
    assert len(path) > 30


def test_approach_distance_equals_path_length(loaded):
    world, inputs = loaded
    for obj_id in sorted(world.objects):
        aabb = world.objects[obj_id].aabb
        found = approach_point(world, aabb, inputs.start.position)
        d = approach_distance(world, aabb, inputs.start.position)
        if found is None:
            assert d is None
        else:
            assert d == pytest.approx(path_length(found[1]), abs=1e-9)


def test_facing():
    pose = facing(Vec2(0.0, 0.0), Vec2(0.0, 1.0))
    assert pose.yaw == pytest.approx(math.pi / 2)
    assert facing(Vec2(1.0, 1.0), Vec2(1.0, 1.0), 0.3).yaw == 0.3


def test_missing_grid_reports_field(demo_text):
    with pytest.raises(SceneFormatError) as info:
        _load_modified(demo_text, lambda d: d.pop("grid"))
    assert info.value.field == "grid"


def test_unknown_key_rejected(demo_text):
    with pytest.raises(SceneFormatError):
        _load_modified(demo_text, lambda d: d.update(lighting="dim"))


def test_start_in_wall_rejected(demo_text):
    with pytest.raises(SceneFormatError) as info:
        _load_modified(demo_text, lambda d: d.update(start={"x": 0.05, "y": 2.0}))
    assert info.value.field == "start"


def test_wrong_carrier_claim_rejected(demo_text):
    def mutate(doc):
        doc["objects"][4]["carrier"] = "counter_kitchen"

    with pytest.raises(SceneFormatError) as info:
        _load_modified(demo_text, mutate)
    assert info.value.field == "objects.4.carrier"


def test_off_carrier_landing_rejected(demo_text):
    def mutate(doc):
        doc["displacements"][0]["at"] = [9.0, 1.0]

    with pytest.raises(SceneFormatError) as info:
        _load_modified(demo_text, mutate)
    assert info.value.field == "displacements.0"


def test_unknown_task_target_rejected(demo_text):
    def mutate(doc):
        doc["tasks"][0]["target"] = "ghost"

    with pytest.raises(SceneFormatError):
        _load_modified(demo_text, mutate)


def test_bad_swatch_rejected(demo_text):
    def mutate(doc):
        doc["objects"][0]["swatch"] = {"color": [300, 0, 0]}

    with pytest.raises(SceneFormatError):
        _load_modified(demo_text, mutate)
