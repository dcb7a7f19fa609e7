# src/core/__init__.py
"""
핵심 모듈 패키지
기하, 특징, CRSG, 내비게이션 정책, CRSG 갱신, 에피소드 실행
"""

from .exceptions import (
    CRSGError,
    ConstructionError,
    GraphFormatError,
    ProviderError,
    SceneFormatError,
)

__all__ = [
    'CRSGError',
    'ConstructionError',
    'GraphFormatError',
    'ProviderError',
    'SceneFormatError',
]
