import math

import numpy as np
import pytest

from core.adaptation import (
    GraphDelta,
    MatchParams,
    ObservedObject,
    carrier_subset_ahead,
    is_same_object,
    match_carriers,
    observed_footprint,
    update_carried,
)
from core.geometry import OccupancyGrid, Pose, RoomPolygon, SensorSpec, Vec2
from core.scene_graph import ConstructionParams, build_graph, check_partition

ROOMS = [
    RoomPolygon("kitchen", (Vec2(4, 0), Vec2(8, 0), Vec2(8, 4), Vec2(4, 4))),
    RoomPolygon("living_room", (Vec2(0, 0), Vec2(4, 0), Vec2(4, 4), Vec2(0, 4))),
]
MATCH = MatchParams()
NEAR_CUP = [Vec2(1.45, 1.45)]


@pytest.fixture
def graph(make_object, providers):
    objects = [
        make_object("table", (1.0, 1.0, 0.0), (2.0, 2.0, 0.5), {"furniture for holding objects": 5, "wooden table": 3}),
        make_object("counter", (5.0, 1.0, 0.0), (7.0, 2.0, 0.9), {"furniture for holding objects": 5, "kitchen counter": 3}),
        make_object("cup", (1.4, 1.4, 0.5), (1.5, 1.5, 0.6), "black cup", (20, 20, 20)),
    ]
    return build_graph(objects, ROOMS, ConstructionParams(), providers)


def _observe(obj, track_id=None, depth=1.0):
    return ObservedObject(
        track_id=track_id or obj.id,
        aabb=obj.aabb,
        captions=obj.captions,
        text_feature=obj.text_feature,
        visual_feature=obj.visual_feature,
        appearance=obj.appearance,
        mean_depth=depth,
    )


def test_observed_object_requires_positive_depth(graph):
    with pytest.raises(ValueError):
        _observe(graph.objects["cup"], depth=0.0)


def test_match_params_validation():
    with pytest.raises(ValueError):
        MatchParams(size_ratio_lo=1.2)


def test_carrier_subset_ahead(graph):
    assert carrier_subset_ahead(graph, Pose(Vec2(0.5, 0.5), 0.0)) == ["counter", "table"]
    assert carrier_subset_ahead(graph, Pose(Vec2(0.5, 0.5), math.pi)) == []
    assert carrier_subset_ahead(graph, Pose(Vec2(3.0, 1.5), 0.0)) == ["counter"]


def test_is_same_object(graph, make_object):
    cup = graph.objects["cup"]
    assert is_same_object(_observe(cup), cup, MATCH)[0]
    moved = make_object("cup", (2.4, 1.4, 0.5), (2.5, 1.5, 0.6), "black cup", (20, 20, 20))
    assert not is_same_object(_observe(moved), cup, MATCH)[0]
    other = make_object("apple", (1.4, 1.4, 0.5), (1.5, 1.5, 0.6), "red apple", (200, 30, 30))
    assert not is_same_object(_observe(other), cup, MATCH)[0]


def test_match_carriers(graph):
    observations = [_observe(graph.objects["cup"]), _observe(graph.objects["table"], track_id="t-9")]
    assert match_carriers(observations, ["table", "counter"], graph, MATCH) == {1: "table"}
    with pytest.raises(ValueError):
        match_carriers(observations, ["cup"], graph, MATCH)


def test_update_unchanged_when_seen_in_place(graph):
    delta = update_carried(graph, "table", [_observe(graph.objects["cup"])], MATCH, NEAR_CUP)
    assert not delta
    assert delta.unchanged_count == 1
    assert graph.version == 0


def test_update_removes_missing_object_in_view(graph):
    delta = update_carried(graph, "table", [], MATCH, NEAR_CUP)
    assert [o.id for _, o in delta.removed] == ["cup"]
    assert "cup" not in graph.objects
    assert "cup" in graph.archive
    assert graph.carried["table"] == set()
    assert graph.version == 1
    assert check_partition(graph) == []


def test_guard_keeps_object_outside_observed_region(graph):
    delta = update_carried(graph, "table", [], MATCH, [])
    assert not delta
    assert "cup" in graph.carried["table"]
    delta = update_carried(graph, "table", [], MATCH, [Vec2(3.5, 3.5)])
    assert not delta


def test_update_adds_new_object(graph, make_object):
    apple = make_object("seen-apple", (1.7, 1.2, 0.5), (1.8, 1.3, 0.58), "red apple", (200, 30, 30))
    observations = [_observe(graph.objects["cup"]), _observe(apple)]
    delta = update_carried(graph, "table", observations, MATCH, NEAR_CUP)
    assert [o.id for _, o in delta.added] == ["observed-0001"]
    assert graph.carried["table"] == {"cup", "observed-0001"}
    assert graph.objects["observed-0001"].room_id == "living_room"
    assert graph.version == 1
    assert check_partition(graph) == []


def test_update_is_idempotent(graph, make_object):
    apple = make_object("seen-apple", (1.7, 1.2, 0.5), (1.8, 1.3, 0.58), "red apple", (200, 30, 30))
    observations = [_observe(graph.objects["cup"]), _observe(apple)]
    update_carried(graph, "table", observations, MATCH, NEAR_CUP)
    before = (dict(graph.objects), {k: set(v) for k, v in graph.carried.items()}, graph.version)
    second = update_carried(graph, "table", observations, MATCH, NEAR_CUP)
    assert not second
    assert (dict(graph.objects), {k: set(v) for k, v in graph.carried.items()}, graph.version) == before


def test_moved_object_is_relinked(graph, make_object):
    update_carried(graph, "table", [], MATCH, NEAR_CUP)
    moved = make_object("cup", (5.5, 1.4, 0.9), (5.6, 1.5, 1.0), "black cup", (20, 20, 20))
    delta = update_carried(graph, "counter", [_observe(moved, track_id="track-7")], MATCH, [Vec2(5.55, 1.45)])
    assert delta.relinked == ["cup"]
    assert graph.carrier_of("cup") == "counter"
    assert "cup" not in graph.archive
    assert graph.version == 2
    assert check_partition(graph) == []


def test_moved_object_seen_on_new_carrier_first(graph, make_object):
    moved = make_object("cup", (5.5, 1.4, 0.9), (5.6, 1.5, 1.0), "black cup", (20, 20, 20))
    delta = update_carried(graph, "counter", [_observe(moved, track_id="track-3")], MATCH, [Vec2(5.55, 1.45)])
    assert delta.relinked == ["cup"]
    assert [o.id for _, o in delta.added] == ["cup"]
    assert graph.carrier_of("cup") == "counter"
    assert graph.carried["table"] == set()
    assert graph.objects["cup"].centroid.x == pytest.approx(5.55)
    assert not any(obj_id.startswith("observed-") for obj_id in graph.objects)
    assert check_partition(graph) == []
    again = update_carried(graph, "table", [], MATCH, NEAR_CUP)
    assert not again


def test_unrelated_object_on_other_carrier_is_not_taken(graph, make_object):
    apple = make_object("seen-apple", (5.5, 1.4, 0.9), (5.6, 1.5, 0.98), "red apple", (200, 30, 30))
    delta = update_carried(graph, "counter", [_observe(apple)], MATCH, [Vec2(5.55, 1.45)])
    assert delta.relinked == []
    assert graph.carrier_of("cup") == "table"
    assert [o.id for _, o in delta.added] == ["observed-0001"]


def _box_distance(box, p):
    dx = max(box.min.x - p.x, 0.0, p.x - box.max.x)
    dy = max(box.min.y - p.y, 0.0, p.y - box.max.y)
    return math.hypot(dx, dy)


def test_guard_on_random_regions(graph):
    rng = np.random.default_rng(41)
    cup_box = graph.objects["cup"].aabb
    for _ in range(1000):
        region = [Vec2(*rng.uniform((0.5, 0.5), (3.0, 3.0))) for _ in range(int(rng.integers(0, 4)))]
        near = any(_box_distance(cup_box, p) <= MATCH.guard_dist for p in region)
        trial = graph.clone()
        delta = update_carried(trial, "table", [], MATCH, region)
        assert ("cup" in trial.archive) == near
        assert ("cup" in trial.carried["table"]) != near
        assert bool(delta) == near
        assert check_partition(trial) == []


def test_update_is_idempotent_on_random_views(graph, make_object):
    rng = np.random.default_rng(43)
    captions = ["red apple", "green bottle", "blue plate", "yellow banana"]
    for case in range(1000):
        observations = [_observe(graph.objects["cup"])] if rng.random() < 0.5 else []
        for k in range(int(rng.integers(0, 3))):
            x, y = rng.uniform(1.05, 1.8, size=2)
            item = make_object(
                f"seen-{case}-{k}", (x, y, 0.5), (x + 0.12, y + 0.12, 0.62),
                captions[int(rng.integers(len(captions)))], tuple(int(v) for v in rng.integers(0, 256, size=3)),
            )
            observations.append(_observe(item))
        region = [Vec2(*rng.uniform((0.8, 0.8), (2.2, 2.2)))] if rng.random() < 0.7 else []
        trial = graph.clone()
        update_carried(trial, "table", observations, MATCH, region)
        before = (dict(trial.objects), {k: set(v) for k, v in trial.carried.items()}, dict(trial.archive), trial.version)
        second = update_carried(trial, "table", observations, MATCH, region)
        assert not second
        assert (dict(trial.objects), {k: set(v) for k, v in trial.carried.items()}, dict(trial.archive), trial.version) == before
        assert check_partition(trial) == []


def test_update_rejects_non_carrier(graph):
    with pytest.raises(ValueError):
        update_carried(graph, "cup", [], MATCH, NEAR_CUP)


def test_observed_footprint_respects_view(graph):
    walls = OccupancyGrid.empty(40, 20, 0.2)
    sensor = SensorSpec(range=3.5, fov=2.0943951023931953, observe_radius_r=2.0)
    table = graph.objects["table"].aabb
    ahead = observed_footprint(Pose(Vec2(0.3, 1.5), 0.0), sensor, walls, table, 0.2)
    behind = observed_footprint(Pose(Vec2(0.3, 1.5), math.pi), sensor, walls, table, 0.2)
    assert len(ahead) == 36
    assert behind == []


def test_graph_delta_record():
    delta = GraphDelta()
    assert delta.to_record() == {'added': [], 'removed': [], 'relinked': [], 'unchanged': 0}
