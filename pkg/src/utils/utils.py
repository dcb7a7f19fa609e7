# src/utils/utils.py
"""
유틸리티 함수 모듈
공통으로 사용되는 헬퍼 함수들
"""

import dataclasses
import hashlib
import json
import logging
import re
from typing import Any, List, Mapping, Optional

from config.config import Config

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


def setup_logging(level: Optional[str] = None, debug: bool = False):
    """루트 로거 설정 (CLI에서 한 번만 호출)"""
    if debug or Config.DEBUG_MODE:
        resolved = logging.DEBUG
    else:
        resolved = getattr(logging, (level or Config.LOG_LEVEL).upper(), logging.INFO)

    logging.basicConfig(
        level=resolved,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def tokenize(text: str) -> List[str]:
    """소문자화 + 영숫자 분리 + 불용어 제거"""
    return [tok for tok in _TOKEN_SPLIT.split(text.lower()) if tok and tok not in Config.TOKEN_STOPWORDS]


def caption_tokens(captions: Mapping[str, int]) -> List[str]:
    """캡션 리스트를 빈도만큼 반복한 토큰 multiset으로 변환"""
    tokens: List[str] = []
    for caption, count in captions.items():
        tokens.extend(tokenize(caption) * int(count))
    return tokens


def top_captions(captions: Mapping[str, int], n: int = 3) -> List[str]:
    """가장 빈도가 높은 캡션 n개 (동률은 사전순)"""
    ordered = sorted(captions.items(), key=lambda item: (-item[1], item[0]))
    return [caption for caption, _ in ordered[:n]]


def apply_overrides(params, overrides: Optional[Mapping[str, Any]]):
    """dataclass 파라미터에 장면 파일의 override 적용"""
    if not overrides:
        return params
    known = {f.name for f in dataclasses.fields(params)}
    unknown = sorted(set(overrides) - known)
    if unknown:
        raise ValueError(f"알 수 없는 파라미터 {unknown} ({type(params).__name__})")
    return dataclasses.replace(params, **dict(overrides))


def canonical_json(data: Any) -> str:
    """정렬된 키, 공백 없는 JSON 문자열"""
    return json.dumps(data, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def sha256_of(data: Any) -> str:
    """canonical JSON의 SHA-256"""
    return hashlib.sha256(canonical_json(data).encode('utf-8')).hexdigest()


def stable_token_seed(token: str, seed: int) -> List[int]:
    """토큰별 난수 시드 (numpy SeedSequence 입력용)"""
    digest = hashlib.sha256(token.encode('utf-8')).digest()
    return [int(seed), int.from_bytes(digest[:8], 'little')]
