# src/utils/__init__.py
"""
유틸리티 함수 패키지
"""

from .utils import (
    setup_logging,
    tokenize,
    caption_tokens,
    top_captions,
    apply_overrides,
    canonical_json,
    sha256_of,
)

__all__ = [
    'setup_logging',
    'tokenize',
    'caption_tokens',
    'top_captions',
    'apply_overrides',
    'canonical_json',
    'sha256_of',
]
