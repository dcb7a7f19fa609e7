# config.py
"""
설정 관리 모듈
환경변수, 상수, 기본 파라미터 테이블을 관리
"""

import os
from dotenv import load_dotenv

# .env 파일 로드
load_dotenv()


class Config:
    """애플리케이션 설정 클래스"""

    # 원격 LLM 서비스 설정 (없으면 mock provider 사용)
    LLM_URL = os.getenv('CRSG_LLM_URL')
    LLM_KEY = os.getenv('CRSG_LLM_KEY')
    LLM_MODEL = os.getenv('CRSG_LLM_MODEL', 'gpt-4o')
    LLM_API_VERSION = os.getenv('CRSG_LLM_API_VERSION')
    LLM_TIMEOUT = float(os.getenv('CRSG_LLM_TIMEOUT', 30))
    EMBED_MODEL = os.getenv('CRSG_EMBED_MODEL')

    # 특징 벡터 설정
    EMBED_DIM = int(os.getenv('CRSG_EMBED_DIM', 64))
    EMBED_SEED = int(os.getenv('CRSG_EMBED_SEED', 0))
    VISUAL_SEED_OFFSET = 1000
    HIST_BINS = int(os.getenv('CRSG_HIST_BINS', 8))

    # 애플리케이션 설정
    DEBUG_MODE = os.getenv('DEBUG', 'False').lower() == 'true'
    LOG_LEVEL = os.getenv('CRSG_LOG_LEVEL', 'INFO')

    # 캐리어 레이어 질의 문장
    CARRIER_QUERY_TEXT = "furniture for holding objects"

    # 어느 방에도 속하지 않는 객체의 방
    FALLBACK_ROOM_ID = "hallway"

    # 바닥에 닿아 있는 객체 판정 높이 (m)
    FLOOR_CONTACT_HEIGHT = 0.10

    # 새로 관측된 객체 ID 접두사
    OBSERVED_ID_PREFIX = "observed-"

    TOKEN_STOPWORDS = frozenset({
        'a', 'an', 'the', 'for', 'of', 'on', 'in', 'at', 'to', 'with', 'and', 'is', 'it',
    })

    DEFAULT_CARRIER_LEXICON = [
        'table', 'desk', 'shelf', 'bookshelf', 'cabinet', 'counter', 'sofa', 'bed', 'nightstand', 'sink',
    ]

    # 요구형 명령 ("I'm thirsty") -> 객체 문구
    DEFAULT_DEMAND_LEXICON = {
        'thirsty': 'cup',
        'drink': 'bottle',
        'hungry': 'apple',
        'read': 'book',
        'bored': 'book',
        'time': 'clock',
        'call': 'phone',
        'tv': 'remote',
    }

    # 캐리어-피캐리어 상식 prior 기본값
    DEFAULT_AFFINITY_PRIOR = 0.3

    # 장면 그래프 구축 파라미터 기본값
    DEFAULT_CONSTRUCTION = {
        'carrier_query_text': CARRIER_QUERY_TEXT,
        'sigma': 0.50,
        'min_footprint_area': 0.15,
        'max_base_height': 0.10,
        'xy_overlap_min': 0.5,
        'vertical_gap_lo': -0.05,
        'vertical_gap_hi': 0.15,
        'max_center_distance_factor': 1.0,
    }

    # 내비게이션 정책 파라미터 (기본 실험값)
    DEFAULT_POLICY = {
        'omega1': 5.0,
        'omega2': 1.0,
        'd_tilde1': 0.3,
        'alpha': 10.0,
        'beta': 0.1,
        'omega_r_same': 1.0,
        'omega_r_diff': 0.8,
        'sigma1': 0.6,
        'same_room_bonus': 0.2,
    }

    # 목표 판정 규칙
    DEFAULT_VERIFICATION = {
        'w_text': 0.40,
        'w_gpt': 0.35,
        'w_rgb': 0.25,
        'theta_text': 0.75,
        'theta_combo': 0.70,
        'gpt_veto': 0.20,
        'use_text': True,
        'use_gpt': True,
        'use_rgb': True,
    }

    # CRSG 갱신 시 매칭 기준
    DEFAULT_MATCHING = {
        'max_centroid_dist': 0.5,
        'size_ratio_lo': 0.6,
        'size_ratio_hi': 1.67,
        'min_text_sim': 0.8,
        'guard_dist': 0.5,
    }

    # 센서 기본값
    DEFAULT_SENSOR = {
        'range': 3.5,
        'fov': 2.0943951023931953,
        'observe_radius_r': 2.0,
        'dropout': 0.0,
        'sense_every': 2,
    }

    # 실행 모드 (ablation 변형 포함)
    MODES = [
        'full',
        'only-carriers-random',
        'only-carriers-llm',
        'no-update',
        'w/o-gpt',
        'w/o-text',
        'w/o-rgb',
    ]

    RANDOM_MODES = ['only-carriers-random']

    @classmethod
    def is_remote_configured(cls) -> bool:
        """원격 LLM 설정 여부 확인"""
        return all([
            cls.LLM_URL,
            cls.LLM_KEY,
        ])
