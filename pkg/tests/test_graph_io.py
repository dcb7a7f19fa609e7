import json

import numpy as np
import pytest

from core.exceptions import GraphFormatError
from core.graph_io import GRAPH_FORMAT, dumps_graph, graph_from_document, graph_to_document, load_graph, save_graph


def test_save_and_load_preserve_graph(demo, tmp_path):
    path = tmp_path / "graph.json"
    save_graph(demo.graph, path)
    loaded = load_graph(path)
    assert loaded.carriers == demo.graph.carriers
    assert loaded.carried == demo.graph.carried
    assert loaded.others == demo.graph.others
    assert loaded.version == demo.graph.version
    assert loaded.objects["cup_black"] == demo.graph.objects["cup_black"]
    assert dumps_graph(loaded) == dumps_graph(demo.graph)


def test_document_is_sorted_and_tagged(demo):
    doc = graph_to_document(demo.graph)
    assert doc['format'] == GRAPH_FORMAT
    assert [o['id'] for o in doc['objects']] == sorted(demo.graph.objects)
    assert doc['carriers'] == sorted(demo.graph.carriers)


def test_dumps_is_deterministic(demo):
    assert dumps_graph(demo.graph) == dumps_graph(demo.graph.clone())


def test_archive_survives_round_trip(demo):
    graph = demo.graph.clone()
    obj = graph.objects.pop("book_grey")
    graph.carried["nightstand_bedroom"].discard("book_grey")
    graph.archive["book_grey"] = obj
    loaded = graph_from_document(dumps_graph(graph))
    assert "book_grey" in loaded.archive
    assert "book_grey" not in loaded.objects
    assert np.array_equal(loaded.archive["book_grey"].text_feature, obj.text_feature)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format="other/9"),
    lambda d: d.pop("carriers"),
    lambda d: d.update(extra=1),
    lambda d: d["objects"][0]["appearance"].update(rgb_b64="***"),
])
def test_invalid_documents_raise(demo, mutate):
    doc = json.loads(dumps_graph(demo.graph))
    mutate(doc)
    with pytest.raises(GraphFormatError):
        graph_from_document(doc)


def test_invalid_json_raises():
    with pytest.raises(GraphFormatError):
        graph_from_document("{not json")


def test_object_in_two_layers_is_rejected(demo):
    doc = json.loads(dumps_graph(demo.graph))
    doc["others"].append("book_grey")
    with pytest.raises(GraphFormatError, match="book_grey|중복"):
        graph_from_document(doc)


def test_carried_entry_without_object_is_rejected(demo):
    doc = json.loads(dumps_graph(demo.graph))
    doc["carried"]["nightstand_bedroom"].append("ghost")
    with pytest.raises(GraphFormatError, match="ghost"):
        graph_from_document(doc)


def test_carried_key_must_be_carrier(demo):
    doc = json.loads(dumps_graph(demo.graph))
    doc["carried"]["book_grey"] = []
    with pytest.raises(GraphFormatError, match="book_grey"):
        graph_from_document(doc)


def test_archived_id_still_live_is_rejected(demo):
    doc = json.loads(dumps_graph(demo.graph))
    doc["archive"] = [o for o in doc["objects"] if o["id"] == "book_grey"]
    with pytest.raises(GraphFormatError, match="archive"):
        graph_from_document(doc)
