# src/providers/__init__.py
"""
Provider 패키지 (임베딩, 상식 순위, 이미지 비교)
"""

from .base import AffinityTable, CarrierCandidateSummary, Providers
from .factory import create_providers
from .mock_providers import HashTextEmbedder, MockCommonsenseRanker, MockImageComparer

__all__ = [
    'AffinityTable',
    'CarrierCandidateSummary',
    'Providers',
    'create_providers',
    'HashTextEmbedder',
    'MockCommonsenseRanker',
    'MockImageComparer',
]
