# src/core/exceptions.py
"""
예외 정의 모듈
"""


class CRSGError(Exception):
    """패키지 공통 예외"""


class SceneFormatError(CRSGError, ValueError):
    """장면 파일 스키마 위반 (필드 경로 포함)"""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class GraphFormatError(CRSGError, ValueError):
    """그래프 문서 파싱/버전 오류"""


class ConstructionError(CRSGError):
    """CRSG 구축 단계 오류"""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class ProviderError(CRSGError):
    """원격 provider 응답 오류"""
