import json

import pytest

from core.features import Swatch, dominant_color_name, histogram_similarity, rgb_histogram
from generators.scene_generator import SuiteEntry, generate_scene, suite_scene_text
from simworld.bench import prepare_scene


def test_same_seed_same_document():
    assert generate_scene(42) == generate_scene(42)
    assert generate_scene(42) != generate_scene(43)


@pytest.mark.parametrize("seed, rooms", [(1, 1), (7, 3), (19, 5)])
def test_generated_scene_loads(seed, rooms):
    doc = generate_scene(seed, n_rooms=rooms)
    prepared = prepare_scene(json.dumps(doc), use_remote=False)
    assert len(prepared.inputs.rooms) == rooms
    assert prepared.world.nav_grid.width == rooms * 20
    assert prepared.graph.carriers
    ids = [o['id'] for o in doc['objects']]
    assert len(ids) == len(set(ids))


def test_tasks_target_carried_objects():
    doc = generate_scene(5, n_tasks=4)
    carried = {o['id'] for o in doc['objects'] if o.get('carrier')}
    assert 1 <= len(doc['tasks']) <= 4
    assert all(t['target'] in carried for t in doc['tasks'])
    targets = {t['target'] for t in doc['tasks']}
    for event in doc['displacements']:
        if event['before_task'] == 0:
            assert event['object'] in targets
        else:
            assert event['object'] not in targets


def test_most_targets_move_before_first_task():
    moved, total = 0, 0
    for seed in range(20):
        doc = generate_scene(seed, n_rooms=3)
        early = {e['object'] for e in doc['displacements'] if e['before_task'] == 0}
        targets = {t['target'] for t in doc['tasks']}
        moved += len(early & targets)
        total += len(targets)
    assert moved >= total // 2


def test_distractor_tasks_use_reference_image():
    doc = generate_scene(3, with_distractors=True)
    assert doc['tasks']
    for task in doc['tasks']:
        assert task['image_of'] == task['target']
        assert " " not in task['text']


def test_queries_expect_existing_objects():
    doc = generate_scene(11)
    ids = {o['id'] for o in doc['objects']}
    assert doc['queries']
    assert all(q['expect'] in ids for q in doc['queries'])


@pytest.mark.parametrize("kwargs", [{'n_rooms': 0}, {'n_rooms': 9}, {'n_tasks': 0}, {'n_tasks': 9}])
def test_generate_rejects_bad_sizes(kwargs):
    with pytest.raises(ValueError):
        generate_scene(1, **kwargs)


def test_suite_scene_text_offsets_seed():
    entry = SuiteEntry(generator_seed=10, rooms=2)
    assert json.loads(suite_scene_text(entry, 3))['seed'] == 13


def test_suite_entry_needs_one_source():
    with pytest.raises(ValueError):
        SuiteEntry()


def test_look_alike_differs_only_in_shade():
    doc = generate_scene(3, with_distractors=True)
    by_id = {o['id']: o for o in doc['objects']}
    twins = [o for o in doc['objects'] if o['id'].endswith('_alt')]
    assert twins
    for twin in twins:
        original = by_id[twin['id'][:-len('_alt')]]
        assert twin['captions'] == original['captions']
        assert twin['carrier'] == original['carrier']
        a = Swatch.solid(tuple(original['swatch']['color']))
        b = Swatch.solid(tuple(twin['swatch']['color']))
        assert dominant_color_name(a) == dominant_color_name(b)
        assert histogram_similarity(rgb_histogram(a), rgb_histogram(b)) == pytest.approx(0.0)


def test_look_alikes_only_with_distractors():
    assert not any(o['id'].endswith('_alt') for o in generate_scene(3)['objects'])
