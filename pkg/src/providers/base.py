# src/providers/base.py
"""
Provider 인터페이스 모듈
텍스트 임베딩, 상식 기반 캐리어 순위, 이미지 비교/설명 역할 정의
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.config import Config
from core.features import Swatch


@dataclass(frozen=True)
class CarrierCandidateSummary:
    """캐리어 후보 요약 (빈도 상위 3개 캡션 + 방)"""

    carrier_id: str
    top_captions: Tuple[str, ...]
    room_id: str

    def __post_init__(self):
        object.__setattr__(self, 'top_captions', tuple(self.top_captions)[:3])


@dataclass(frozen=True)
class AffinityTable:
    """(객체 토큰, 캐리어 토큰) -> prior"""

    priors: Mapping[Tuple[str, str], float] = field(default_factory=dict)
    default: float = Config.DEFAULT_AFFINITY_PRIOR

    def __post_init__(self):
        values = list(self.priors.values()) + [self.default]
        if any(not (0.0 <= v <= 1.0) for v in values):
            raise ValueError("affinity prior는 [0, 1] 범위")
        object.__setattr__(self, 'priors', dict(self.priors))

    @classmethod
    def from_nested(cls, table: Optional[Mapping], default: Optional[float] = None) -> "AffinityTable":
        """{"default": p, "priors": {obj: {carrier: p}}} 형식에서 생성"""
        table = table or {}
        nested = table.get('priors', {})
        priors = {
            (obj, carrier): float(prior)
            for obj, row in nested.items()
            for carrier, prior in row.items()
        }
        if default is None:
            default = table.get('default', Config.DEFAULT_AFFINITY_PRIOR)
        return cls(priors, float(default))

    def to_nested(self) -> Dict:
        nested: Dict[str, Dict[str, float]] = {}
        for (obj, carrier), prior in sorted(self.priors.items()):
            nested.setdefault(obj, {})[carrier] = prior
        return {'default': self.default, 'priors': nested}

    def uniform(self) -> "AffinityTable":
        """모든 쌍이 기본값인 테이블 (상식 prior 제거)"""
        return AffinityTable({}, self.default)

    def affinity(self, target_tokens: Iterable[str], carrier_tokens: Iterable[str]) -> float:
        """테이블에 있는 토큰 쌍 중 최대 prior, 없으면 기본값"""
        carrier_tokens = set(carrier_tokens)
        hits = [
            self.priors[(t, c)]
            for t in set(target_tokens)
            for c in carrier_tokens
            if (t, c) in self.priors
        ]
        return max(hits) if hits else self.default


class TextEmbedder(ABC):
    """토큰 리스트 -> 단위 특징 벡터"""

    @abstractmethod
    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        ...


class CommonsenseRanker(ABC):
    """캐리어 순위, 캐리어 캡션 필터, 요구형 명령 해석"""

    @abstractmethod
    def rank_carriers(
        self,
        target_desc: str,
        candidates: Sequence[CarrierCandidateSummary],
        target_room: Optional[str],
    ) -> List[str]:
        ...

    @abstractmethod
    def filter_carrier_captions(self, candidates: Sequence[CarrierCandidateSummary]) -> List[str]:
        ...

    @abstractmethod
    def interpret_demand(self, text: str) -> str:
        ...


class ImageComparer(ABC):
    """이미지 비교 확률 및 텍스트 설명"""

    @abstractmethod
    def compare_images(self, a: Swatch, b: Swatch) -> float:
        ...

    @abstractmethod
    def describe_image(self, a: Swatch, label_hint: Optional[str] = None) -> str:
        ...


@dataclass(frozen=True)
class Providers:
    """에피소드가 사용하는 provider 묶음"""

    embedder: TextEmbedder
    ranker: CommonsenseRanker
    vision: ImageComparer
    name: str = "mock"


def check_permutation(ranked: Sequence[str], candidates: Sequence[CarrierCandidateSummary]) -> bool:
    return sorted(ranked) == sorted(c.carrier_id for c in candidates)
