# src/providers/factory.py
"""
Provider 생성 모듈
환경변수 설정 여부에 따라 mock 또는 원격(+mock 대체) 선택
"""

import logging
from typing import Optional

from config.config import Config
from core.exceptions import ProviderError
from providers.base import AffinityTable, Providers
from providers.mock_providers import HashTextEmbedder, MockCommonsenseRanker, MockImageComparer
from providers.remote_provider import (
    FallbackImageComparer,
    FallbackRanker,
    RemoteLLMProvider,
    RemoteTextEmbedder,
)

logger = logging.getLogger(__name__)


def create_providers(
    affinity: Optional[AffinityTable] = None,
    use_remote: Optional[bool] = None,
    same_room_bonus: float = 0.2,
    image_exponent: float = 1.0,
) -> Providers:
    """provider 묶음 생성 (use_remote=None 이면 환경변수로 결정)"""
    ranker = MockCommonsenseRanker(affinity, same_room_bonus=same_room_bonus)
    vision = MockImageComparer(exponent=image_exponent)
    embedder = HashTextEmbedder()

    if use_remote is None:
        use_remote = Config.is_remote_configured()
    if not use_remote:
        return Providers(embedder, ranker, vision, name="mock")

    try:
        remote = RemoteLLMProvider()
    except ProviderError as e:
        logger.warning(f"원격 provider 초기화 실패, mock 사용: {e}")
        return Providers(embedder, ranker, vision, name="mock")

    if Config.EMBED_MODEL:
        embedder = RemoteTextEmbedder()
    logger.info(f"원격 provider 사용: model={remote.model}")
    return Providers(
        embedder,
        FallbackRanker(remote, ranker),
        FallbackImageComparer(remote, vision),
        name="remote",
    )
