# src/providers/remote_provider.py
"""
원격 LLM provider 모듈
chat-completion 형식 서비스를 이용한 캐리어 순위, 이미지 비교/설명
실패 시 mock으로 대체하는 래퍼 포함
"""

import base64
import logging
import re
from io import BytesIO
from typing import Dict, List, Optional, Sequence

import numpy as np
from openai import AzureOpenAI, OpenAI, OpenAIError

from config.config import Config
from core.exceptions import ProviderError
from core.features import Swatch
from providers.base import (
    CarrierCandidateSummary,
    CommonsenseRanker,
    ImageComparer,
    TextEmbedder,
    check_permutation,
)

logger = logging.getLogger(__name__)

SYSTEM_PROMPT = (
    "You assist a household robot that searches for objects placed on furniture. "
    "Answer with exactly the requested line format and nothing else."
)

_RANKING_RE = re.compile(r"^\s*ranking\s*:\s*(.+)$", re.IGNORECASE | re.MULTILINE)
_CARRIERS_RE = re.compile(r"^\s*carriers\s*:\s*(.*)$", re.IGNORECASE | re.MULTILINE)
_PROB_RE = re.compile(r"^\s*prob\s*:\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)", re.IGNORECASE | re.MULTILINE)
_OBJECT_RE = re.compile(r"^\s*object\s*:\s*(.+)$", re.IGNORECASE | re.MULTILINE)


def parse_ranking(reply: str, candidates: Sequence[CarrierCandidateSummary]) -> List[str]:
    """`RANKING: id1,id2,...` 줄 파싱 (입력 id의 순열이어야 함)"""
    match = _RANKING_RE.search(reply or "")
    if not match:
        raise ProviderError(f"RANKING 줄이 없음: {reply!r}")
    ranked = [part.strip() for part in match.group(1).split(',') if part.strip()]
    if not check_permutation(ranked, candidates):
        raise ProviderError(f"입력 캐리어의 순열이 아님: {ranked}")
    return ranked


def parse_carriers(reply: str, candidates: Sequence[CarrierCandidateSummary]) -> List[str]:
    """`CARRIERS: id1,id2` 줄 파싱 (입력의 부분집합이어야 함)"""
    match = _CARRIERS_RE.search(reply or "")
    if not match:
        raise ProviderError(f"CARRIERS 줄이 없음: {reply!r}")
    known = {c.carrier_id for c in candidates}
    kept = [part.strip() for part in match.group(1).split(',') if part.strip()]
    unknown = sorted(set(kept) - known)
    if unknown:
        raise ProviderError(f"알 수 없는 캐리어 id: {unknown}")
    # 입력 순서 유지
    return [c.carrier_id for c in candidates if c.carrier_id in set(kept)]


def parse_probability(reply: str) -> float:
    """`PROB: <float>` 줄 파싱"""
    match = _PROB_RE.search(reply or "")
    if not match:
        raise ProviderError(f"PROB 줄이 없음: {reply!r}")
    return float(np.clip(float(match.group(1)), 0.0, 1.0))


def parse_object(reply: str) -> str:
    match = _OBJECT_RE.search(reply or "")
    if not match:
        raise ProviderError(f"OBJECT 줄이 없음: {reply!r}")
    return match.group(1).strip()


def swatch_to_data_url(swatch: Swatch) -> str:
    """swatch를 base64 PNG data URL로 변환"""
    buffer = BytesIO()
    swatch.to_image().save(buffer, format='PNG')
    buffer.seek(0)
    return "data:image/png;base64," + base64.b64encode(buffer.getvalue()).decode()


def _create_client(manual_config: Optional[Dict[str, str]] = None):
    """OpenAI 호환 또는 Azure OpenAI 클라이언트 생성"""
    config = manual_config or {}
    url = config.get('url', Config.LLM_URL)
    key = config.get('key', Config.LLM_KEY)
    api_version = config.get('api_version', Config.LLM_API_VERSION)

    if not (url and key):
        raise ProviderError("CRSG_LLM_URL / CRSG_LLM_KEY 미설정")

    try:
        if api_version:
            return AzureOpenAI(azure_endpoint=url, api_key=key, api_version=api_version, timeout=Config.LLM_TIMEOUT)
        return OpenAI(base_url=url, api_key=key, timeout=Config.LLM_TIMEOUT)
    except OpenAIError as e:
        raise ProviderError(f"LLM 클라이언트 초기화 오류: {e}") from e


class RemoteLLMProvider(CommonsenseRanker, ImageComparer):
    """원격 chat-completion 서비스 클라이언트"""

    def __init__(self, manual_config: Optional[Dict[str, str]] = None, client=None):
        self.model = (manual_config or {}).get('model', Config.LLM_MODEL)
        self.client = client if client is not None else _create_client(manual_config)

    def _chat(self, user_content) -> str:
        try:
            response = self.client.chat.completions.create(
                model=self.model,
                messages=[
                    {"role": "system", "content": SYSTEM_PROMPT},
                    {"role": "user", "content": user_content},
                ],
                temperature=0,
                max_tokens=200,
            )
            return response.choices[0].message.content or ""
        except OpenAIError as e:
            raise ProviderError(f"원격 LLM 호출 실패: {e}") from e

    def rank_carriers(
        self,
        target_desc: str,
        candidates: Sequence[CarrierCandidateSummary],
        target_room: Optional[str],
    ) -> List[str]:
        if not candidates:
            raise ValueError("순위를 매길 캐리어 후보가 없음")
        lines = [
            f"{i}. {c.carrier_id} (room: {c.room_id}): {'; '.join(c.top_captions)}"
            for i, c in enumerate(candidates, start=1)
        ]
        prompt = (
            f"Target object: {target_desc}\n"
            f"The target was last seen in room: {target_room}. "
            "Prefer furniture in the same room when plausible.\n"
            "Candidate furniture:\n" + "\n".join(lines) + "\n"
            "Order all candidate ids from most to least likely to hold the target.\n"
            "Reply with one line: RANKING: id1,id2,..."
        )
        return parse_ranking(self._chat(prompt), candidates)

    def filter_carrier_captions(self, candidates: Sequence[CarrierCandidateSummary]) -> List[str]:
        if not candidates:
            return []
        lines = [f"{i}. {c.carrier_id}: {'; '.join(c.top_captions)}" for i, c in enumerate(candidates, start=1)]
        prompt = (
            "Which of these objects are furniture that can hold other objects on top "
            "(tables, shelves, counters and similar)?\n" + "\n".join(lines) + "\n"
            "Reply with one line: CARRIERS: id1,id2,... (empty if none)"
        )
        return parse_carriers(self._chat(prompt), candidates)

    def interpret_demand(self, text: str) -> str:
        prompt = (
            f"A person said: \"{text}\". Which household object should the robot fetch? "
            "If the sentence already names an object, repeat it.\n"
            "Reply with one line: OBJECT: <short object description>"
        )
        return parse_object(self._chat(prompt))

    def compare_images(self, a: Swatch, b: Swatch) -> float:
        content = [
            {"type": "text", "text": (
                "Do these two images show the same object instance? "
                "Reply with one line: PROB: <probability between 0 and 1>"
            )},
            {"type": "image_url", "image_url": {"url": swatch_to_data_url(a)}},
            {"type": "image_url", "image_url": {"url": swatch_to_data_url(b)}},
        ]
        return parse_probability(self._chat(content))

    def describe_image(self, a: Swatch, label_hint: Optional[str] = None) -> str:
        text = "Describe the object in this image in a few words (colour and category)."
        if label_hint:
            text += f" Hint: {label_hint}."
        content = [
            {"type": "text", "text": text},
            {"type": "image_url", "image_url": {"url": swatch_to_data_url(a)}},
        ]
        reply = self._chat(content).strip()
        if not reply:
            raise ProviderError("빈 이미지 설명 응답")
        return reply.splitlines()[0].strip()


class RemoteTextEmbedder(TextEmbedder):
    """원격 embeddings 엔드포인트 (mock 대체 없음)"""

    def __init__(self, model: Optional[str] = None, manual_config: Optional[Dict[str, str]] = None, client=None):
        self.model = model or Config.EMBED_MODEL
        if not self.model:
            raise ProviderError("CRSG_EMBED_MODEL 미설정")
        self.client = client if client is not None else _create_client(manual_config)

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            raise ValueError("빈 토큰 리스트는 임베딩할 수 없음")
        try:
            response = self.client.embeddings.create(model=self.model, input=" ".join(sorted(tokens)))
        except OpenAIError as e:
            raise ProviderError(f"원격 임베딩 실패: {e}") from e
        vec = np.asarray(response.data[0].embedding, dtype=np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0.0 or not np.all(np.isfinite(vec)):
            raise ProviderError("원격 임베딩이 유효하지 않음")
        vec = vec / norm
        vec.setflags(write=False)
        return vec


class FallbackRanker(CommonsenseRanker):
    """원격 실패 시 로그 후 mock 결과 반환"""

    def __init__(self, primary: CommonsenseRanker, fallback: CommonsenseRanker):
        self.primary = primary
        self.fallback = fallback

    def rank_carriers(self, target_desc, candidates, target_room):
        try:
            return self.primary.rank_carriers(target_desc, candidates, target_room)
        except ProviderError as e:
            logger.warning(f"rank_carriers 원격 실패, mock 사용: {e}")
            return self.fallback.rank_carriers(target_desc, candidates, target_room)

    def filter_carrier_captions(self, candidates):
        try:
            return self.primary.filter_carrier_captions(candidates)
        except ProviderError as e:
            logger.warning(f"filter_carrier_captions 원격 실패, mock 사용: {e}")
            return self.fallback.filter_carrier_captions(candidates)

    def interpret_demand(self, text):
        try:
            return self.primary.interpret_demand(text)
        except ProviderError as e:
            logger.warning(f"interpret_demand 원격 실패, mock 사용: {e}")
            return self.fallback.interpret_demand(text)


class FallbackImageComparer(ImageComparer):
    """describe_image만 mock으로 대체, compare_images 실패는 호출자에게 전달"""

    def __init__(self, primary: ImageComparer, fallback: ImageComparer):
        self.primary = primary
        self.fallback = fallback

    def compare_images(self, a, b):
        # 판정 단계에서 해당 신호를 빼고 가중치를 재정규화함
        return self.primary.compare_images(a, b)

    def describe_image(self, a, label_hint=None):
        try:
            return self.primary.describe_image(a, label_hint)
        except ProviderError as e:
            logger.warning(f"describe_image 원격 실패, mock 사용: {e}")
            return self.fallback.describe_image(a, label_hint)
