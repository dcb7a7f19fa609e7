# src/generators/scene_generator.py
"""
장면 생성 모듈
시드 기반 다중 방 주택: 캐리어, 피캐리어 생활용품, 방해 객체, 이동 이벤트, 과제 시퀀스
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config.config import Config
from core.exceptions import SceneFormatError
from core.features import COLOR_NAMES, Swatch, dominant_color_name
from providers.base import AffinityTable

logger = logging.getLogger(__name__)

ROOM_SIZE = 4.0
RESOLUTION = 0.2
WALL_HALF = 0.1
# 문 틈 (y 범위)
DOOR_GAP = (1.6, 2.4)

ROOM_TYPES = [
    ('living_room', ['coffee table', 'bookshelf']),
    ('kitchen', ['kitchen counter', 'dining table']),
    ('bedroom', ['nightstand', 'desk']),
    ('study', ['desk', 'bookshelf']),
    ('dining_room', ['dining table', 'cabinet']),
]

MATERIALS = ['wooden', 'oak', 'metal', 'glass', 'marble']

CARRIER_HEIGHTS = {
    'coffee table': 0.45,
    'bookshelf': 0.8,
    'kitchen counter': 0.9,
    'dining table': 0.75,
    'nightstand': 0.55,
    'desk': 0.75,
    'cabinet': 0.85,
}

# 범주 -> (x, y, z) 크기 (m)
ITEM_SIZES = {
    'cup': (0.1, 0.1, 0.12),
    'book': (0.25, 0.35, 0.05),
    'bottle': (0.1, 0.1, 0.25),
    'apple': (0.08, 0.08, 0.08),
    'phone': (0.08, 0.15, 0.01),
    'remote': (0.05, 0.18, 0.02),
    'clock': (0.15, 0.06, 0.15),
    'bowl': (0.15, 0.15, 0.07),
}

ITEM_COLORS = ['black', 'white', 'red', 'green', 'blue', 'yellow', 'grey', 'orange']

FLOOR_OBJECTS = [
    ('grey fabric sofa', (0.4, 0.4, 0.8)),
    ('tall floor lamp', (0.35, 0.35, 1.6)),
    ('potted plant', (0.4, 0.4, 1.0)),
    ('stainless steel refrigerator', (0.4, 0.4, 1.8)),
]

AFFINITY_PRIORS = {
    'cup': {'counter': 0.8, 'table': 0.7, 'desk': 0.5},
    'bottle': {'counter': 0.8, 'table': 0.6, 'cabinet': 0.5},
    'bowl': {'counter': 0.8, 'table': 0.7, 'cabinet': 0.6},
    'apple': {'counter': 0.7, 'table': 0.7},
    'book': {'bookshelf': 0.9, 'nightstand': 0.7, 'desk': 0.7, 'table': 0.5},
    'phone': {'nightstand': 0.7, 'desk': 0.7, 'table': 0.6},
    'remote': {'table': 0.8, 'nightstand': 0.5},
    'clock': {'nightstand': 0.8, 'bookshelf': 0.6, 'desk': 0.5},
}

PLACEMENT_AFFINITY = AffinityTable.from_nested({'default': Config.DEFAULT_AFFINITY_PRIOR, 'priors': AFFINITY_PRIORS})

WOOD = [139, 90, 43]
PLACEMENT_TRIES = 30
TARGET_MOVE_PROB = 0.75
BYSTANDER_MOVE_PROB = 0.3
# 닮은 물건 색조 이동 최소량 (채널당)
SHADE_STEP = 17
# 물건 배치와 이동 위치를 affinity 쪽으로 기울이는 정도
PLACEMENT_SHARPNESS = 3.0


def _round(v: float) -> float:
    return round(float(v), 3)


class _Carrier:
    def __init__(self, obj_id: str, kind: str, box: Tuple[float, float, float, float], height: float):
        self.id = obj_id
        self.kind = kind
        self.box = box
        self.height = height
        self.placed: List[Tuple[float, float, float, float]] = []

    def free_spot(self, rng: np.random.Generator, size: Tuple[float, float, float]) -> Optional[Tuple[float, float]]:
        """윗면에서 기존 물건과 겹치지 않는 중심 (없으면 None)"""
        x0, y0, x1, y1 = self.box
        hx, hy = size[0] / 2.0 + 0.03, size[1] / 2.0 + 0.03
        if x1 - x0 <= 2 * hx or y1 - y0 <= 2 * hy:
            return None
        for _ in range(PLACEMENT_TRIES):
            cx = rng.uniform(x0 + hx, x1 - hx)
            cy = rng.uniform(y0 + hy, y1 - hy)
            rect = (cx - hx, cy - hy, cx + hx, cy + hy)
            if not any(_overlaps(rect, other) for other in self.placed):
                self.placed.append(rect)
                return (cx, cy)
        return None

    def release(self, center: Tuple[float, float]):
        self.placed = [r for r in self.placed if not (r[0] < center[0] < r[2] and r[1] < center[1] < r[3])]


def _affinity(category: str, carrier: _Carrier) -> float:
    return PLACEMENT_AFFINITY.affinity([category], carrier.kind.split())


def _weighted_index(rng, weights: List[float]) -> int:
    """affinity ** PLACEMENT_SHARPNESS 에 비례하는 추첨"""
    w = np.asarray(weights, dtype=np.float64) ** PLACEMENT_SHARPNESS
    return int(rng.choice(len(w), p=w / w.sum()))


def _overlaps(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def _walls(n_rooms: int) -> List[List[float]]:
    width, height = n_rooms * ROOM_SIZE, ROOM_SIZE
    walls = [
        [0.0, 0.0, width, WALL_HALF],
        [0.0, height - WALL_HALF, width, height],
        [0.0, 0.0, WALL_HALF, height],
        [width - WALL_HALF, 0.0, width, height],
    ]
    for i in range(1, n_rooms):
        x = i * ROOM_SIZE
        walls.append([x - WALL_HALF, 0.0, x + WALL_HALF, DOOR_GAP[0]])
        walls.append([x - WALL_HALF, DOOR_GAP[1], x + WALL_HALF, height])
    return walls


def _carriers_for_room(rng, i: int, kinds: List[str]) -> List[_Carrier]:
    """위쪽 벽에 하나, 절반 확률로 아래쪽 벽에 하나"""
    x_base = i * ROOM_SIZE
    carriers = []
    d = rng.uniform(0.5, 0.7)
    x0 = x_base + 0.5 + rng.uniform(0.0, 0.8)
    w = rng.uniform(1.0, 1.6)
    carriers.append(_Carrier(f"{kinds[0].replace(' ', '_')}_{i}", kinds[0], (x0, 3.8 - d, x0 + w, 3.8), CARRIER_HEIGHTS[kinds[0]]))
    if rng.random() < 0.5:
        d = rng.uniform(0.5, 0.7)
        x0 = x_base + 0.5 + rng.uniform(0.0, 0.6)
        w = rng.uniform(1.0, 1.6)
        carriers.append(_Carrier(f"{kinds[1].replace(' ', '_')}_{i}", kinds[1], (x0, 0.2, x0 + w, 0.2 + d), CARRIER_HEIGHTS[kinds[1]]))
    return carriers


def _carrier_doc(c: _Carrier, material: str) -> dict:
    x0, y0, x1, y1 = c.box
    return {
        'id': c.id,
        'captions': {Config.CARRIER_QUERY_TEXT: 5, f"{material} {c.kind}": 3},
        'aabb': {'min': [_round(x0), _round(y0), 0.0], 'max': [_round(x1), _round(y1), c.height]},
        'swatch': {'color': WOOD},
    }


def _item_doc(obj_id: str, color: str, category: str, center, carrier: _Carrier) -> dict:
    sx, sy, sz = ITEM_SIZES[category]
    cx, cy = center
    return {
        'id': obj_id,
        'captions': {f"{color} {category}": 4},
        'aabb': {
            'min': [_round(cx - sx / 2), _round(cy - sy / 2), carrier.height],
            'max': [_round(cx + sx / 2), _round(cy + sy / 2), _round(carrier.height + sz)],
        },
        'carrier': carrier.id,
        'swatch': {'color': list(COLOR_NAMES[color])},
    }


def generate_scene(
    seed: int,
    n_rooms: int = 3,
    with_distractors: bool = False,
    n_tasks: int = 5,
) -> dict:
    """시드가 같으면 같은 장면 문서 (scene_schema 형식)"""
    if not (1 <= n_rooms <= 8):
        raise ValueError("n_rooms는 1-8")
    if not (1 <= n_tasks <= 8):
        raise ValueError("n_tasks는 1-8")
    rng = np.random.default_rng(seed)

    rooms, carriers, objects = [], [], []
    for i in range(n_rooms):
        name, kinds = ROOM_TYPES[i % len(ROOM_TYPES)]
        room_id = name if i < len(ROOM_TYPES) else f"{name}_{i}"
        x0 = i * ROOM_SIZE
        rooms.append({
            'id': room_id,
            'name': room_id.replace('_', ' '),
            'vertices': [[x0, 0.0], [x0 + ROOM_SIZE, 0.0], [x0 + ROOM_SIZE, ROOM_SIZE], [x0, ROOM_SIZE]],
        })
        room_carriers = _carriers_for_room(rng, i, kinds)
        for c in room_carriers:
            objects.append(_carrier_doc(c, MATERIALS[int(rng.integers(len(MATERIALS)))]))
        carriers.extend(room_carriers)

        label, size = FLOOR_OBJECTS[int(rng.integers(len(FLOOR_OBJECTS)))]
        ox = x0 + rng.uniform(3.1, 3.6 - size[0])
        oy = rng.uniform(0.3, 0.6)
        objects.append({
            'id': f"{label.split()[-1]}_{i}",
            'captions': {label: 3},
            'aabb': {'min': [_round(ox), _round(oy), 0.0], 'max': [_round(ox + size[0]), _round(oy + size[1]), size[2]]},
            'swatch': {'color': list(COLOR_NAMES['grey'])},
        })

    # 피캐리어: (색, 범주) 쌍은 장면 안에서 유일
    used = set()
    items: Dict[str, Tuple[str, str, _Carrier, Tuple[float, float]]] = {}
    categories = sorted(ITEM_SIZES)
    for c in carriers:
        for _ in range(int(rng.integers(1, 4))):
            category = categories[_weighted_index(rng, [_affinity(cat, c) for cat in categories])]
            free = [col for col in ITEM_COLORS if (col, category) not in used]
            if not free:
                continue
            color = free[int(rng.integers(len(free)))]
            center = c.free_spot(rng, ITEM_SIZES[category])
            if center is None:
                continue
            used.add((color, category))
            items[f"{category}_{color}"] = (color, category, c, center)

    if with_distractors:
        # 같은 범주, 다른 색의 유사 객체
        for obj_id in sorted(items):
            color, category, _, _ = items[obj_id]
            free = [col for col in ITEM_COLORS if (col, category) not in used]
            if not free:
                continue
            decoy_color = free[int(rng.integers(len(free)))]
            host = carriers[int(rng.integers(len(carriers)))]
            center = host.free_spot(rng, ITEM_SIZES[category])
            if center is None:
                continue
            used.add((decoy_color, category))
            items[f"{category}_{decoy_color}"] = (decoy_color, category, host, center)

    for obj_id in sorted(items):
        color, category, carrier, center = items[obj_id]
        objects.append(_item_doc(obj_id, color, category, center, carrier))

    item_ids = sorted(items)
    n_tasks = min(n_tasks, len(item_ids))
    targets = [item_ids[int(k)] for k in rng.permutation(len(item_ids))[:n_tasks]]

    tasks = []
    for obj_id in targets:
        color, category, _, _ = items[obj_id]
        if with_distractors:
            tasks.append({'target': obj_id, 'text': category, 'image_of': obj_id})
        else:
            tasks.append({'target': obj_id, 'text': f"{color} {category}"})

    if with_distractors:
        objects.extend(_look_alikes(rng, items, targets))
    displacements = _displacements(rng, items, carriers, targets)
    queries = _queries(items, carriers)

    doc = {
        'name': f"generated-{seed}",
        'building_id': f"house-{seed}",
        'seed': int(seed),
        'grid': {
            'resolution': RESOLUTION,
            'origin': [0.0, 0.0],
            'width': int(round(n_rooms * ROOM_SIZE / RESOLUTION)),
            'height': int(round(ROOM_SIZE / RESOLUTION)),
            'walls': _walls(n_rooms),
        },
        'rooms': rooms,
        'objects': objects,
        'start': {'x': 0.7, 'y': 2.0, 'yaw': 0.0},
        'affinity_table': {'default': Config.DEFAULT_AFFINITY_PRIOR, 'priors': AFFINITY_PRIORS},
        'displacements': displacements,
        'tasks': tasks,
        'queries': queries,
    }
    logger.debug(f"장면 생성: seed={seed}, {len(objects)} objects, {len(tasks)} tasks")
    return doc


def _displacements(rng, items, carriers, targets) -> List[dict]:
    """첫 과제 전(오프라인 그래프 구축 뒤)에 목표 대부분을 다른 캐리어로 옮기고, 과제 사이에는 목표가 아닌 물건만 가끔 옮김"""
    events = []
    if len(carriers) < 2:
        return events
    current = {obj_id: (info[2], info[3]) for obj_id, info in items.items()}

    def move(obj_id: str, k: int):
        carrier, center = current[obj_id]
        options = [c for c in carriers if c.id != carrier.id]
        host = options[_weighted_index(rng, [_affinity(items[obj_id][1], o) for o in options])]
        spot = host.free_spot(rng, ITEM_SIZES[items[obj_id][1]])
        if spot is None:
            return
        carrier.release(center)
        current[obj_id] = (host, spot)
        events.append({'object': obj_id, 'carrier': host.id, 'before_task': k, 'at': [_round(spot[0]), _round(spot[1])]})

    for target in targets:
        if rng.random() < TARGET_MOVE_PROB:
            move(target, 0)
    bystanders = sorted(set(items) - set(targets))
    for k in range(1, len(targets)):
        if bystanders and rng.random() < BYSTANDER_MOVE_PROB:
            move(bystanders[int(rng.integers(len(bystanders)))], k)
    return events


def _shade(rgb: Tuple[int, int, int]) -> Tuple[int, int, int]:
    """채널마다 가까운 히스토그램 구간 경계를 넘어 SHADE_STEP 이상 이동한 색"""
    width = 256 // Config.HIST_BINS
    shaded = []
    for v in rgb:
        p = v % width
        down = p + 1 if v - (p + 1) >= 0 else None
        up = width - p if v + (width - p) <= 255 else None
        if up is None or (down is not None and down <= up):
            shaded.append(v - max(down, SHADE_STEP))
        else:
            shaded.append(v + max(up, SHADE_STEP))
    return tuple(int(np.clip(v, 0, 255)) for v in shaded)


def _look_alikes(rng, items, targets) -> List[dict]:
    """목표와 캡션, 색 이름이 같고 색조만 다른 물건을 목표의 처음 캐리어에 둠"""
    docs = []
    for obj_id in targets:
        color, category, carrier, _ = items[obj_id]
        shade = _shade(COLOR_NAMES[color])
        if dominant_color_name(Swatch.solid(shade)) != color:
            continue
        center = carrier.free_spot(rng, ITEM_SIZES[category])
        if center is None:
            continue
        doc = _item_doc(f"{obj_id}_alt", color, category, center, carrier)
        doc['swatch'] = {'color': list(shade)}
        docs.append(doc)
    return docs


def _queries(items, carriers) -> List[dict]:
    """exact(색+범주), qualified(범주 on 캐리어 종류), demand 질의"""
    queries = []
    for obj_id in sorted(items):
        color, category, _, _ = items[obj_id]
        queries.append({'text': f"{color} {category}", 'expect': obj_id, 'kind': 'exact'})

    by_category: Dict[str, List[str]] = {}
    for obj_id, (_, category, _, _) in items.items():
        by_category.setdefault(category, []).append(obj_id)

    kinds = sorted({c.kind.split()[-1] for c in carriers})
    for category in sorted(by_category):
        members = by_category[category]
        if len(members) < 2:
            continue
        for kind in kinds:
            on_kind = [m for m in members if items[m][2].kind.split()[-1] == kind]
            if len(on_kind) == 1:
                queries.append({'text': f"the {category} on the {kind}", 'expect': on_kind[0], 'kind': 'qualified'})

    for demand, phrase in sorted(Config.DEFAULT_DEMAND_LEXICON.items()):
        members = by_category.get(phrase, [])
        if len(members) == 1:
            queries.append({'text': f"I am {demand}", 'expect': members[0], 'kind': 'demand'})
    return queries


class SuiteEntry(BaseModel):
    """생성 시드(generator_seed) 또는 장면 파일 경로(path)"""

    model_config = ConfigDict(extra="forbid")

    generator_seed: Optional[int] = None
    path: Optional[str] = None
    rooms: int = Field(default=3, ge=1, le=8)
    distractors: bool = False
    tasks: int = Field(default=5, ge=1, le=8)

    @model_validator(mode='after')
    def _one_source(self):
        if (self.generator_seed is None) == (self.path is None):
            raise ValueError("generator_seed 또는 path 중 정확히 하나가 필요함")
        return self


class SuiteDoc(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "suite"
    scenes: List[SuiteEntry] = Field(min_length=1)


def load_suite(path: Union[str, Path]) -> SuiteDoc:
    path = Path(path)
    try:
        suite = SuiteDoc.model_validate_json(path.read_text(encoding='utf-8'))
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(part) for part in first['loc']) or "<root>"
        raise SceneFormatError(loc, first['msg']) from e
    # 상대 경로는 manifest 위치 기준
    for entry in suite.scenes:
        if entry.path is not None and not Path(entry.path).is_absolute():
            entry.path = str(path.parent / entry.path)
    return suite


def suite_scene_text(entry: SuiteEntry, seed_offset: int = 0) -> str:
    """suite 항목의 장면 JSON (생성 항목은 generator_seed + seed_offset)"""
    if entry.path is not None:
        return Path(entry.path).read_text(encoding='utf-8')
    doc = generate_scene(entry.generator_seed + seed_offset, entry.rooms, entry.distractors, entry.tasks)
    return json.dumps(doc, ensure_ascii=False, sort_keys=True)
