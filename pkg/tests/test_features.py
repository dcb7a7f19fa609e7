import numpy as np
import pytest

from core.features import (
    Swatch,
    as_feature,
    cosine_similarity,
    dominant_color_name,
    embed_text,
    histogram_similarity,
    rgb_histogram,
    visual_feature,
)


def test_cosine_similarity_basic():
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 3.0])) == pytest.approx(0.0)
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == pytest.approx(-1.0)


def test_cosine_similarity_rejects_zero_and_mismatch():
    with pytest.raises(ValueError):
        cosine_similarity(np.zeros(3), np.ones(3))
    with pytest.raises(ValueError):
        cosine_similarity(np.ones(2), np.ones(3))


def test_as_feature_is_read_only():
    vec = as_feature([1.0, 2.0])
    with pytest.raises(ValueError):
        vec[0] = 5.0


def test_as_feature_rejects_nan():
    with pytest.raises(ValueError):
        as_feature([1.0, float('nan')])


def test_embed_text_is_unit_and_order_free():
    a = embed_text(["black", "cup"], dim=32, seed=0)
    b = embed_text(["cup", "black"], dim=32, seed=0)
    assert np.linalg.norm(a) == pytest.approx(1.0)
    assert np.array_equal(a, b)


def test_embed_text_deterministic_and_seeded():
    a = embed_text(["red", "book"], dim=32, seed=0)
    assert np.array_equal(a, embed_text(["red", "book"], dim=32, seed=0))
    assert not np.array_equal(a, embed_text(["red", "book"], dim=32, seed=1))


def test_embed_text_shared_tokens_are_closer():
    black_cup = embed_text(["black", "cup"])
    white_cup = embed_text(["white", "cup"])
    red_book = embed_text(["red", "book"])
    assert cosine_similarity(black_cup, white_cup) > cosine_similarity(black_cup, red_book)


def test_embed_text_rejects_empty():
    with pytest.raises(ValueError):
        embed_text([])


def test_swatch_bytes_round_trip():
    swatch = Swatch.solid((10, 20, 30), width=3, height=2)
    restored = Swatch.from_bytes(swatch.to_bytes(), 3, 2)
    assert restored == swatch
    assert restored.mean_color().tolist() == [10.0, 20.0, 30.0]


def test_swatch_rejects_bad_shape():
    with pytest.raises(ValueError):
        Swatch(np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(ValueError):
        Swatch.from_bytes(b"\x00" * 5, 2, 2)


def test_rgb_histogram_normalized():
    hist = rgb_histogram(Swatch.solid((255, 0, 128)), k=8)
    assert hist.bins.shape == (24,)
    assert hist.bins.sum() == pytest.approx(1.0)
    # 255 는 마지막 구간
    assert hist.bins[7] == pytest.approx(1 / 3)
    assert hist.bins[8] == pytest.approx(1 / 3)
    assert hist.bins[16 + 4] == pytest.approx(1 / 3)


@pytest.mark.parametrize("k", [1, 3, 7])
def test_rgb_histogram_bad_bins(k):
    with pytest.raises(ValueError):
        rgb_histogram(Swatch.solid((0, 0, 0)), k=k)


def test_histogram_similarity_same_and_different():
    red = rgb_histogram(Swatch.solid((200, 30, 30)))
    grey = rgb_histogram(Swatch.solid((128, 128, 128)))
    assert histogram_similarity(red, red) == pytest.approx(1.0)
    assert histogram_similarity(red, grey) < 0.5


@pytest.mark.parametrize("rgb, name", [
    ((20, 20, 20), "black"),
    ((240, 240, 240), "white"),
    ((200, 30, 30), "red"),
])
def test_dominant_color_name(rgb, name):
    assert dominant_color_name(Swatch.solid(rgb)) == name


def test_visual_feature_depends_on_color():
    red = visual_feature(["book"], Swatch.solid((200, 30, 30)))
    grey = visual_feature(["book"], Swatch.solid((128, 128, 128)))
    assert np.linalg.norm(red) == pytest.approx(1.0)
    assert not np.array_equal(red, grey)
