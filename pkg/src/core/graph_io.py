# src/core/graph_io.py
"""
CRSG 저장/불러오기 모듈
버전이 있는 JSON 문서 (특징은 숫자 배열, 스와치는 base64 RGB)
"""

import base64
import binascii
import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.exceptions import GraphFormatError
from core.features import Swatch, as_feature
from core.geometry import Aabb, RoomPolygon, Vec2, Vec3
from core.scene_graph import CarrierRelationshipSceneGraph, SceneObject, check_partition

logger = logging.getLogger(__name__)

GRAPH_FORMAT = "crsg-graph/1"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AabbDoc(_Strict):
    min: List[float] = Field(min_length=3, max_length=3)
    max: List[float] = Field(min_length=3, max_length=3)


class SwatchDoc(_Strict):
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    rgb_b64: str


class RoomDoc(_Strict):
    id: str
    name: str = ""
    vertices: List[List[float]]


class ObjectDoc(_Strict):
    id: str
    aabb: AabbDoc
    captions: Dict[str, int]
    room_id: Optional[str] = None
    text_feature: List[float]
    visual_feature: List[float]
    appearance: SwatchDoc


class GraphDoc(_Strict):
    format: Literal["crsg-graph/1"]
    version: int = Field(ge=0)
    building_id: str = "building"
    next_observed: int = Field(default=1, ge=1)
    rooms: List[RoomDoc]
    objects: List[ObjectDoc]
    carriers: List[str]
    carried: Dict[str, List[str]]
    others: List[str]
    archive: List[ObjectDoc] = Field(default_factory=list)


def _object_to_doc(obj: SceneObject) -> dict:
    return {
        'id': obj.id,
        'aabb': {'min': obj.aabb.min.as_list(), 'max': obj.aabb.max.as_list()},
        'captions': dict(sorted(obj.captions.items())),
        'room_id': obj.room_id,
        'text_feature': [float(v) for v in obj.text_feature],
        'visual_feature': [float(v) for v in obj.visual_feature],
        'appearance': {
            'width': obj.appearance.width,
            'height': obj.appearance.height,
            'rgb_b64': base64.b64encode(obj.appearance.to_bytes()).decode('ascii'),
        },
    }


def _object_from_doc(doc: ObjectDoc) -> SceneObject:
    try:
        raw = base64.b64decode(doc.appearance.rgb_b64, validate=True)
    except binascii.Error as e:
        raise GraphFormatError(f"objects.{doc.id}.appearance: base64 오류 ({e})") from e
    return SceneObject(
        id=doc.id,
        aabb=Aabb(Vec3(*doc.aabb.min), Vec3(*doc.aabb.max)),
        captions=doc.captions,
        text_feature=as_feature(doc.text_feature),
        visual_feature=as_feature(doc.visual_feature),
        appearance=Swatch.from_bytes(raw, doc.appearance.width, doc.appearance.height),
        room_id=doc.room_id,
    )


def graph_to_document(graph: CarrierRelationshipSceneGraph) -> dict:
    return {
        'format': GRAPH_FORMAT,
        'version': graph.version,
        'building_id': graph.building_id,
        'next_observed': graph.next_observed,
        'rooms': [
            {'id': r.id, 'name': r.name, 'vertices': [v.as_list() for v in r.vertices]}
            for r in sorted(graph.rooms, key=lambda r: r.id)
        ],
        'objects': [_object_to_doc(graph.objects[k]) for k in sorted(graph.objects)],
        'carriers': sorted(graph.carriers),
        'carried': {k: sorted(v) for k, v in sorted(graph.carried.items())},
        'others': sorted(graph.others),
        'archive': [_object_to_doc(graph.archive[k]) for k in sorted(graph.archive)],
    }


def graph_from_document(data: Union[dict, str]) -> CarrierRelationshipSceneGraph:
    """문서 검증 후 그래프 생성 (실패 시 부분 그래프 없이 GraphFormatError)"""
    try:
        if isinstance(data, str):
            doc = GraphDoc.model_validate_json(data)
        else:
            doc = GraphDoc.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = ".".join(str(part) for part in first['loc']) or "<root>"
        raise GraphFormatError(f"{loc}: {first['msg']}") from e

    try:
        rooms = [RoomPolygon(r.id, tuple(Vec2(*v) for v in r.vertices), r.name) for r in doc.rooms]
        objects = {o.id: _object_from_doc(o) for o in doc.objects}
        archive = {o.id: _object_from_doc(o) for o in doc.archive}
    except (TypeError, ValueError) as e:
        raise GraphFormatError(str(e)) from e

    graph = CarrierRelationshipSceneGraph(
        building_id=doc.building_id,
        rooms=rooms,
        objects=objects,
        carriers=set(doc.carriers),
        carried={k: set(v) for k, v in doc.carried.items()},
        others=set(doc.others),
        version=doc.version,
        archive=archive,
        next_observed=doc.next_observed,
    )
    problems = check_partition(graph)
    overlap = sorted(set(graph.archive) & set(graph.objects))
    if overlap:
        problems.append(f"archive와 objects에 동시에 있는 id: {overlap}")
    if problems:
        raise GraphFormatError("; ".join(problems))
    return graph


def dumps_graph(graph: CarrierRelationshipSceneGraph) -> str:
    return json.dumps(graph_to_document(graph), ensure_ascii=False, indent=1, sort_keys=True) + "\n"


def save_graph(graph: CarrierRelationshipSceneGraph, path: Union[str, Path]):
    path = Path(path)
    path.write_text(dumps_graph(graph), encoding='utf-8')
    logger.debug(f"그래프 저장: {path} (version={graph.version})")


def load_graph(path: Union[str, Path]) -> CarrierRelationshipSceneGraph:
    text = Path(path).read_text(encoding='utf-8')
    return graph_from_document(text)
