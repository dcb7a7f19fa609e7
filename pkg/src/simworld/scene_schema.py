# src/simworld/scene_schema.py
"""
장면 파일 스키마 모듈 (pydantic)
grid, rooms, objects, affinity_table, displacements, tasks, queries, seed, params
"""

from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.exceptions import SceneFormatError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Strict):
    resolution: float = Field(gt=0)
    origin: List[float] = Field(default_factory=lambda: [0.0, 0.0], min_length=2, max_length=2)
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    # 벽 사각형 [x0, y0, x1, y1]
    walls: List[List[float]] = Field(default_factory=list)

    @property
    def extent(self):
        return (
            self.origin[0],
            self.origin[1],
            self.origin[0] + self.width * self.resolution,
            self.origin[1] + self.height * self.resolution,
        )


class RoomSpec(_Strict):
    id: str
    name: str = ""
    vertices: List[List[float]] = Field(min_length=3)


class AabbSpec(_Strict):
    min: List[float] = Field(min_length=3, max_length=3)
    max: List[float] = Field(min_length=3, max_length=3)

    @model_validator(mode='after')
    def _positive_extent(self):
        if any(hi <= lo for lo, hi in zip(self.min, self.max)):
            raise ValueError("aabb max는 min보다 모든 축에서 커야 함")
        return self


class SwatchSpec(_Strict):
    """단색(color) 또는 픽셀 격자(pixels[y][x] = [r, g, b])"""

    color: Optional[List[int]] = Field(default=None, min_length=3, max_length=3)
    pixels: Optional[List[List[List[int]]]] = None
    width: int = Field(default=4, ge=1)
    height: int = Field(default=4, ge=1)

    @model_validator(mode='after')
    def _one_source(self):
        if (self.color is None) == (self.pixels is None):
            raise ValueError("color 또는 pixels 중 정확히 하나가 필요함")
        values = self.color or [c for row in self.pixels for px in row for c in px]
        if any(not (0 <= v <= 255) for v in values):
            raise ValueError("색 값은 0-255")
        if self.pixels is not None:
            if not self.pixels or any(len(row) != len(self.pixels[0]) for row in self.pixels):
                raise ValueError("pixels는 직사각형 격자여야 함")
            if any(len(px) != 3 for row in self.pixels for px in row):
                raise ValueError("각 픽셀은 [r, g, b]")
        return self


class ObjectSpec(_Strict):
    id: str
    captions: Dict[str, int] = Field(min_length=1)
    aabb: AabbSpec
    carrier: Optional[str] = None
    swatch: SwatchSpec

    @model_validator(mode='after')
    def _positive_counts(self):
        if any(count < 1 for count in self.captions.values()):
            raise ValueError("캡션 빈도는 1 이상")
        return self


class AffinitySpec(_Strict):
    default: float = Field(default=0.3, ge=0.0, le=1.0)
    priors: Dict[str, Dict[str, float]] = Field(default_factory=dict)


class DisplacementSpec(_Strict):
    object: str
    carrier: str
    before_task: int = Field(ge=0)
    at: Optional[List[float]] = Field(default=None, min_length=2, max_length=2)


class TaskSpec(_Strict):
    target: str
    text: Optional[str] = None
    image_of: Optional[str] = None
    image: Optional[SwatchSpec] = None
    hint: Optional[str] = None

    @model_validator(mode='after')
    def _has_command(self):
        if not self.text and self.image_of is None and self.image is None:
            raise ValueError("text, image_of, image 중 하나가 필요함")
        if self.image_of is not None and self.image is not None:
            raise ValueError("image_of와 image는 함께 쓸 수 없음")
        return self


class QuerySpec(_Strict):
    text: str
    expect: str
    kind: Literal["exact", "qualified", "demand", "visual"] = "exact"


class PoseSpec(_Strict):
    x: float
    y: float
    yaw: float = 0.0


class ParamsSpec(_Strict):
    construction: Dict[str, Any] = Field(default_factory=dict)
    policy: Dict[str, Any] = Field(default_factory=dict)
    verification: Dict[str, Any] = Field(default_factory=dict)
    matching: Dict[str, Any] = Field(default_factory=dict)
    sensor: Dict[str, Any] = Field(default_factory=dict)


class SceneDoc(_Strict):
    name: str = "scene"
    building_id: str = "building"
    seed: int = 0
    grid: GridSpec
    rooms: List[RoomSpec] = Field(default_factory=list)
    objects: List[ObjectSpec] = Field(default_factory=list)
    start: PoseSpec
    affinity_table: AffinitySpec = Field(default_factory=AffinitySpec)
    displacements: List[DisplacementSpec] = Field(default_factory=list)
    tasks: List[TaskSpec] = Field(default_factory=list)
    queries: List[QuerySpec] = Field(default_factory=list)
    params: ParamsSpec = Field(default_factory=ParamsSpec)

    @model_validator(mode='after')
    def _references(self):
        ids = [o.id for o in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError("객체 id 중복")
        known = set(ids)
        x0, y0, x1, y1 = self.grid.extent
        for obj in self.objects:
            if obj.carrier is not None and obj.carrier not in known:
                raise ValueError(f"객체 '{obj.id}'의 carrier '{obj.carrier}'가 없음")
            if obj.aabb.min[0] < x0 or obj.aabb.min[1] < y0 or obj.aabb.max[0] > x1 or obj.aabb.max[1] > y1:
                raise ValueError(f"객체 '{obj.id}'가 격자 밖에 있음")
        for room in self.rooms:
            if any(not (x0 <= v[0] <= x1 and y0 <= v[1] <= y1) for v in room.vertices):
                raise ValueError(f"방 '{room.id}'가 격자 밖에 있음")
        for event in self.displacements:
            if event.object not in known or event.carrier not in known:
                raise ValueError(f"displacement 참조 오류: {event.object} -> {event.carrier}")
        for task in self.tasks:
            if task.target not in known or (task.image_of is not None and task.image_of not in known):
                raise ValueError(f"task 참조 오류: {task.target}")
        for q in self.queries:
            if q.expect not in known:
                raise ValueError(f"query 기대 객체가 없음: {q.expect}")
        return self


def parse_scene(text: str) -> SceneDoc:
    """JSON 텍스트 검증 (위반 시 필드 경로를 담은 SceneFormatError)"""
    try:
        return SceneDoc.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(part) for part in first['loc']) or "<root>"
        raise SceneFormatError(loc, first['msg']) from e
