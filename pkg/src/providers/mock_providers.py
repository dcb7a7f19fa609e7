# src/providers/mock_providers.py
"""
결정적 mock provider 모듈
모든 출력은 (입력, 설정)의 순수 함수
"""

import logging
from typing import Iterable, List, Mapping, Optional, Sequence

import numpy as np
from PIL import Image

from config.config import Config
from core.features import COLOR_NAMES, Swatch, dominant_color_name, embed_text
from providers.base import (
    AffinityTable,
    CarrierCandidateSummary,
    CommonsenseRanker,
    ImageComparer,
    TextEmbedder,
)
from utils.utils import tokenize

logger = logging.getLogger(__name__)


class HashTextEmbedder(TextEmbedder):
    """시드 해시 기반 텍스트 임베딩"""

    def __init__(self, dim: int = None, seed: int = None):
        self.dim = Config.EMBED_DIM if dim is None else int(dim)
        self.seed = Config.EMBED_SEED if seed is None else int(seed)

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        return embed_text(tokens, self.dim, self.seed)


class MockCommonsenseRanker(CommonsenseRanker):
    """affinity 테이블 + 같은 방 가산점 기반 캐리어 순위"""

    def __init__(
        self,
        affinity: Optional[AffinityTable] = None,
        carrier_lexicon: Optional[Iterable[str]] = None,
        demand_lexicon: Optional[Mapping[str, str]] = None,
        same_room_bonus: float = 0.2,
    ):
        self.affinity = affinity or AffinityTable()
        self.carrier_lexicon = frozenset(carrier_lexicon or Config.DEFAULT_CARRIER_LEXICON)
        self.demand_lexicon = dict(demand_lexicon or Config.DEFAULT_DEMAND_LEXICON)
        self.same_room_bonus = same_room_bonus

    def score(self, target_tokens: List[str], candidate: CarrierCandidateSummary, target_room: Optional[str]) -> float:
        carrier_tokens = [tok for caption in candidate.top_captions for tok in tokenize(caption)]
        value = self.affinity.affinity(target_tokens, carrier_tokens)
        if target_room is not None and candidate.room_id == target_room:
            value += self.same_room_bonus
        return value

    def rank_carriers(
        self,
        target_desc: str,
        candidates: Sequence[CarrierCandidateSummary],
        target_room: Optional[str],
    ) -> List[str]:
        if not candidates:
            raise ValueError("순위를 매길 캐리어 후보가 없음")
        target_tokens = tokenize(target_desc)
        scored = [(-self.score(target_tokens, c, target_room), c.carrier_id) for c in candidates]
        return [carrier_id for _, carrier_id in sorted(scored)]

    def filter_carrier_captions(self, candidates: Sequence[CarrierCandidateSummary]) -> List[str]:
        kept = []
        for candidate in candidates:
            tokens = {tok for caption in candidate.top_captions for tok in tokenize(caption)}
            if tokens & self.carrier_lexicon:
                kept.append(candidate.carrier_id)
        return kept

    def interpret_demand(self, text: str) -> str:
        for token in tokenize(text):
            if token in self.demand_lexicon:
                return self.demand_lexicon[token]
        return text


class MockImageComparer(ImageComparer):
    """색 이름 배치 일치도 기반 이미지 비교

    픽셀마다 대표 색 이름을 붙여 같은 위치끼리 비교하고, 평균 색 거리로 감쇠한다.
    RGB 히스토그램 구간 경계와 무관하므로 같은 색 계열의 다른 색조는 높게 본다.
    """

    def __init__(self, exponent: float = 1.0, shade_scale: float = 160.0):
        if exponent <= 0:
            raise ValueError("exponent > 0")
        if shade_scale <= 0:
            raise ValueError("shade_scale > 0")
        self.exponent = exponent
        self.shade_scale = shade_scale
        self._names = sorted(COLOR_NAMES)
        self._palette = np.asarray([COLOR_NAMES[n] for n in self._names], dtype=np.float64)

    def _name_grid(self, pixels: np.ndarray) -> np.ndarray:
        flat = pixels.reshape(-1, 3).astype(np.float64)
        dist = ((flat[:, None, :] - self._palette[None, :, :]) ** 2).sum(axis=2)
        return dist.argmin(axis=1)

    def compare_images(self, a: Swatch, b: Swatch) -> float:
        other = b.pixels
        if b.pixels.shape != a.pixels.shape:
            other = np.asarray(b.to_image().resize((a.width, a.height), Image.Resampling.NEAREST))
        agree = float(np.mean(self._name_grid(a.pixels) == self._name_grid(other)))
        shade = float(np.linalg.norm(a.mean_color() - b.mean_color()))
        closeness = max(0.0, 1.0 - shade / self.shade_scale)
        return float(np.clip(agree * closeness, 0.0, 1.0) ** self.exponent)

    def describe_image(self, a: Swatch, label_hint: Optional[str] = None) -> str:
        if label_hint:
            return label_hint
        return f"{dominant_color_name(a)} object"
