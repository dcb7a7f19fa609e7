# src/config/__init__.py
"""
설정 관리 패키지
"""

from .config import Config

__all__ = ['Config']