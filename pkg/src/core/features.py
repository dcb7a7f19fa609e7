# src/core/features.py
"""
특징 벡터 모듈
코사인 유사도, 결정적 텍스트 임베딩, RGB 히스토그램 외형 시그니처
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Tuple

import numpy as np
from PIL import Image

from config.config import Config
from utils.utils import stable_token_seed

# 대표 색상 이름 (describe_image 및 시각 특징용)
COLOR_NAMES = {
    'black': (20, 20, 20),
    'white': (235, 235, 235),
    'grey': (128, 128, 128),
    'red': (200, 30, 30),
    'green': (30, 160, 60),
    'blue': (30, 60, 200),
    'yellow': (230, 210, 40),
    'orange': (240, 130, 20),
    'brown': (120, 75, 35),
    'purple': (130, 50, 160),
    'pink': (240, 150, 180),
}


def as_feature(values: Iterable[float]) -> np.ndarray:
    """읽기 전용 float64 벡터로 변환"""
    vec = np.array(list(values) if not isinstance(values, np.ndarray) else values, dtype=np.float64)
    if vec.ndim != 1:
        raise ValueError("특징 벡터는 1차원이어야 함")
    if not np.all(np.isfinite(vec)):
        raise ValueError("특징 벡터에 유한하지 않은 값")
    vec.setflags(write=False)
    return vec


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """u·v / (|u||v|)"""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"차원 불일치: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("영벡터의 코사인 유사도는 정의되지 않음")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@lru_cache(maxsize=4096)
def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(stable_token_seed(token, seed))
    vec = rng.standard_normal(dim)
    vec /= np.linalg.norm(vec)
    vec.setflags(write=False)
    return vec


def embed_text(tokens: Sequence[str], dim: int = None, seed: int = None) -> np.ndarray:
    """토큰별 시드 단위벡터의 평균을 정규화한 결정적 임베딩"""
    dim = Config.EMBED_DIM if dim is None else int(dim)
    seed = Config.EMBED_SEED if seed is None else int(seed)
    if not tokens:
        raise ValueError("빈 토큰 리스트는 임베딩할 수 없음")
    if dim < 1:
        raise ValueError("dim >= 1")

    # 정렬 후 합산 (순서 불변)
    total = np.zeros(dim, dtype=np.float64)
    for token in sorted(tokens):
        total += _token_vector(token, dim, seed)
    norm = np.linalg.norm(total)
    if norm == 0.0:
        # 서로 상쇄된 경우 (사실상 발생하지 않음)
        total = _token_vector(sorted(tokens)[0], dim, seed).copy()
        norm = 1.0
    return as_feature(total / norm)


@dataclass(frozen=True, eq=False)
class Swatch:
    """외형 이미지 조각, pixels[y, x] = (R, G, B)"""

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3:
            raise ValueError("swatch pixels는 (h, w, 3) 배열")
        if px.shape[0] * px.shape[1] < 1:
            raise ValueError("swatch 크기 width*height >= 1")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise ValueError("픽셀 값은 0-255")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, 'pixels', px)

    @classmethod
    def solid(cls, rgb: Tuple[int, int, int], width: int = 4, height: int = 4) -> "Swatch":
        px = np.zeros((height, width, 3), dtype=np.uint8)
        px[:, :] = rgb
        return cls(px)

    @classmethod
    def from_bytes(cls, data: bytes, width: int, height: int) -> "Swatch":
        px = np.frombuffer(data, dtype=np.uint8)
        if px.size != width * height * 3:
            raise ValueError(f"swatch 바이트 길이 불일치: {px.size} != {width * height * 3}")
        return cls(px.reshape(height, width, 3))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def to_bytes(self) -> bytes:
        return self.pixels.tobytes()

    def to_image(self) -> Image.Image:
        return Image.fromarray(self.pixels, mode='RGB')

    def mean_color(self) -> np.ndarray:
        return self.pixels.reshape(-1, 3).mean(axis=0)

    def __eq__(self, other):
        if not isinstance(other, Swatch):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))


@dataclass(frozen=True, eq=False)
class RgbHistogram:
    """R, G, B 순으로 이어붙인 3K 정규화 히스토그램"""

    bins: np.ndarray = field(repr=False)
    k: int

    def __post_init__(self):
        if self.bins.shape != (3 * self.k,):
            raise ValueError(f"히스토그램 길이 {self.bins.shape} != 3K ({3 * self.k})")


def rgb_histogram(img: Swatch, k: int = None) -> RgbHistogram:
    """채널별 K구간 픽셀 수를 3*w*h로 정규화 (255는 최상위 구간)"""
    k = Config.HIST_BINS if k is None else int(k)
    if k < 2 or 256 % k != 0:
        raise ValueError(f"K는 256의 약수이고 2 이상이어야 함: {k}")

    # PIL histogram: 채널당 256개 값, R-G-B 순
    counts = np.asarray(img.to_image().histogram(), dtype=np.float64).reshape(3, k, 256 // k).sum(axis=2)
    bins = counts.reshape(-1) / (3.0 * img.width * img.height)
    return RgbHistogram(as_feature(bins), k)


def histogram_similarity(a: RgbHistogram, b: RgbHistogram) -> float:
    """정규화된 3K 벡터의 코사인 유사도 ([0, 1])"""
    if a.k != b.k:
        raise ValueError(f"K 불일치: {a.k} vs {b.k}")
    return float(np.clip(cosine_similarity(a.bins, b.bins), 0.0, 1.0))


def dominant_color_name(img: Swatch) -> str:
    """평균 색과 가장 가까운 대표 색 이름"""
    mean = img.mean_color()
    best = min(
        COLOR_NAMES.items(),
        key=lambda item: (float(np.sum((mean - np.asarray(item[1], dtype=np.float64)) ** 2)), item[0]),
    )
    return best[0]


def visual_feature(tokens: Sequence[str], appearance: Swatch, dim: int = None, seed: int = None) -> np.ndarray:
    """캡션 토큰 + 대표 색 이름을 별도 시드로 임베딩 (CLIP 대응)"""
    seed = Config.EMBED_SEED if seed is None else int(seed)
    return embed_text(list(tokens) + [dominant_color_name(appearance)], dim, seed + Config.VISUAL_SEED_OFFSET)
