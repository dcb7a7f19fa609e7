"""공용 fixture: 데모 장면, mock provider, 객체 생성기"""

from pathlib import Path

import pytest

from core.features import Swatch
from core.geometry import Aabb, Vec3
from core.scene_graph import make_scene_object
from providers.base import AffinityTable
from providers.factory import create_providers
from simworld.bench import prepare_scene

ROOT = Path(__file__).resolve().parents[1]
DEMO_SCENE = ROOT / "data" / "scenes" / "demo_scene.json"


@pytest.fixture
def demo_path() -> Path:
    return DEMO_SCENE


@pytest.fixture
def demo_text() -> str:
    return DEMO_SCENE.read_text(encoding='utf-8')


@pytest.fixture
def demo(demo_text):
    return prepare_scene(demo_text, use_remote=False)


@pytest.fixture
def providers():
    affinity = AffinityTable.from_nested({
        'default': 0.3,
        'priors': {'cup': {'table': 0.7, 'counter': 0.8}, 'book': {'shelf': 0.8}},
    })
    return create_providers(affinity, use_remote=False)


@pytest.fixture
def make_object(providers):
    """make_object(id, (x0, y0, z0), (x1, y1, z1), captions, rgb)"""

    def factory(obj_id, lo, hi, captions, rgb=(128, 128, 128)):
        if isinstance(captions, str):
            captions = {captions: 3}
        return make_scene_object(
            obj_id,
            Aabb(Vec3(*lo), Vec3(*hi)),
            captions,
            Swatch.solid(rgb),
            providers.embedder,
        )

    return factory
